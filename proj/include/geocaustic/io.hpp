#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geocaustic/envelope.hpp"

namespace geocaustic {

/// Input error with a 1-based position in the offending document (0 when unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string source, int line, int column)
        : Error(ErrorKind::Parse, what), source_(std::move(source)), line_(line), column_(column) {}

    const std::string& source() const { return source_; }
    int line() const { return line_; }
    int column() const { return column_; }
    /// "source:line:column: message"
    std::string describe() const;

private:
    std::string source_;
    int line_, column_;
};

struct BuiltinSurface {
    std::string kind;
    std::string params;
    std::string description;
};

/// Built-in surface kinds accepted in surface documents.
std::vector<BuiltinSurface> builtin_surfaces();

/// Parses {"kind": ..., "params": {...}} or {"kind": "custom", "metric": [...], "domain": [...]}.
Surface parse_surface(const std::string& text, const std::string& source = "<surface>");
Surface load_surface(const std::filesystem::path& path);

/// Parses a curve document. `surface` is used when given; otherwise the document's "surface"
/// entry (inline object or path relative to `base_dir`) is loaded.
RegularCurve parse_curve(const std::string& text, const std::string& source,
                         const Surface* surface, const std::filesystem::path& base_dir = {});
RegularCurve load_curve(const std::filesystem::path& path, const Surface* surface = nullptr);

/// Shortest round-trip decimal representation.
std::string format_number(double x);

/// Rows (xi, tau, u, v, chart) for every sample of every component.
std::string branch_csv(const CausticBranch& branch);
std::string decomposition_json(const EnvelopeDecomposition& decomposition);
/// Chart-0 projection: curve black, caustics colored by |p|, inflectional geodesics dashed,
/// singularities marked, chart boundaries grey.
std::string decomposition_svg(const EnvelopeDecomposition& decomposition);

}  // namespace geocaustic
