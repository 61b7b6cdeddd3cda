#include "geocaustic/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

namespace geocaustic {

using nlohmann::json;
using nlohmann::ordered_json;

std::string ParseError::describe() const {
    std::ostringstream os;
    os << source_;
    if (line_ > 0) os << ':' << line_ << ':' << column_;
    os << ": " << what();
    return os.str();
}

namespace {

struct Position {
    int line = 0, column = 0;
};

Position position_at(const std::string& text, std::size_t offset) {
    Position p{1, 1};
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

/// Document context used to attach positions to semantic errors.
class Document {
public:
    Document(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    json parse() const {
        try {
            return json::parse(text_);
        } catch (const json::parse_error& e) {
            const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
            const Position p = position_at(text_, byte);
            std::string msg = e.what();
            const auto colon = msg.rfind(": ");
            if (colon != std::string::npos) msg = msg.substr(colon + 2);
            throw ParseError("invalid JSON: " + msg, source_, p.line, p.column);
        }
    }

    /// Offset of the first `"key"` token, or npos.
    std::size_t key_offset(const std::string& key) const { return text_.find('"' + key + '"'); }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const std::size_t at = key.empty() ? std::string::npos : key_offset(key);
        const Position p = at == std::string::npos ? Position{} : position_at(text_, at);
        throw ParseError(msg, source_, p.line, p.column);
    }

    /// Rethrows an expression error at the position of the expression inside the document.
    [[noreturn]] void fail_expression(const std::string& key, const std::string& expr,
                                      const Error& e) const {
        std::size_t at = key_offset(key);
        std::size_t value = at == std::string::npos ? std::string::npos : text_.find('"' + expr + '"', at);
        if (value == std::string::npos) fail(key, e.what());
        const int column = std::isnan(e.where()) ? 1 : static_cast<int>(e.where());
        const Position p = position_at(text_, value + static_cast<std::size_t>(column));
        throw ParseError(e.what(), source_, p.line, p.column);
    }

    const json& member(const json& obj, const std::string& key) const {
        if (!obj.is_object() || !obj.contains(key)) fail(key, "missing field '" + key + "'");
        return obj.at(key);
    }
    double number(const json& obj, const std::string& key) const {
        const json& v = member(obj, key);
        if (!v.is_number()) fail(key, "field '" + key + "' must be a number");
        return v.get<double>();
    }
    double number_or(const json& obj, const std::string& key, double fallback) const {
        return obj.is_object() && obj.contains(key) ? number(obj, key) : fallback;
    }
    std::string string(const json& obj, const std::string& key) const {
        const json& v = member(obj, key);
        if (!v.is_string()) fail(key, "field '" + key + "' must be a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const json& v, const std::string& key, std::size_t size = 0) const {
        if (!v.is_array()) fail(key, "field '" + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) fail(key, "field '" + key + "' must be an array of numbers");
            out.push_back(x.get<double>());
        }
        if (size && out.size() != size)
            fail(key, "field '" + key + "' must have " + std::to_string(size) + " entries");
        return out;
    }
    Expression expression(const json& obj, const std::string& key, const std::string& var,
                          const std::map<std::string, double>& probe) const {
        const json& v = member(obj, key);
        if (!v.is_string()) fail(key, "field '" + key + "' must be an expression string");
        const std::string text = v.get<std::string>();
        return expression_text(key, text, var, probe);
    }
    Expression expression_text(const std::string& key, const std::string& text, const std::string& var,
                               const std::map<std::string, double>& probe) const {
        try {
            Expression e = Expression::parse(text);
            if (!var.empty()) (void)e.eval_jet(var, probe.at(var));
            else (void)e.eval(probe);
            return e;
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Parse) throw;
            fail_expression(key, text, e);
        }
    }

    const std::string& source() const { return source_; }

private:
    const std::string& text_;
    std::string source_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read file", path.string(), 0, 0);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string normalized_kind(std::string k) {
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
    if (k == "plane" || k == "euclidean") return "euclidean-plane";
    if (k == "sphere") return "unit-sphere";
    if (k == "half-plane" || k == "hyperbolic") return "hyperbolic-half-plane";
    if (k == "ellipsoid") return "ellipsoid-of-revolution";
    if (k == "perturbed" || k == "conformal") return "conformal-perturbation";
    return k;
}

Surface surface_from(const json& j, const Document& doc) {
    if (!j.is_object()) doc.fail("", "surface description must be a JSON object");
    const std::string kind = normalized_kind(doc.string(j, "kind"));
    const json params = j.contains("params") ? j.at("params") : json::object();
    if (!params.is_object()) doc.fail("params", "field 'params' must be an object");
    if (kind == "euclidean-plane") return Surface::euclidean_plane();
    if (kind == "unit-sphere") return Surface::unit_sphere();
    if (kind == "hyperbolic-half-plane") return Surface::hyperbolic_half_plane();
    if (kind == "ellipsoid-of-revolution") {
        const double c = doc.number_or(params, "c", 1.0);
        if (!(c > 0.0)) doc.fail("c", "ellipsoid semi-axis 'c' must be positive");
        return Surface::ellipsoid_of_revolution(c);
    }
    if (kind == "conformal-perturbation") {
        const Surface base = params.contains("base") ? surface_from(params.at("base"), doc)
                                                      : Surface::unit_sphere();
        BumpSpec bump;
        if (params.contains("freq")) {
            const auto f = doc.numbers(params.at("freq"), "freq", 3);
            bump.freq = {f[0], f[1], f[2]};
        }
        if (params.contains("phase")) {
            const auto f = doc.numbers(params.at("phase"), "phase", 3);
            bump.phase = {f[0], f[1], f[2]};
        }
        return Surface::conformal_perturbation(base, doc.number_or(params, "amplitude", 0.05), bump);
    }
    if (kind == "custom") {
        const json& dom = doc.member(j, "domain");
        if (!dom.is_array() || dom.size() != 2) doc.fail("domain", "domain must be [[u0,u1],[v0,v1]]");
        const auto du = doc.numbers(dom[0], "domain", 2);
        const auto dv = doc.numbers(dom[1], "domain", 2);
        if (!(du[0] < du[1]) || !(dv[0] < dv[1])) doc.fail("domain", "domain intervals must be increasing");
        const std::map<std::string, double> probe{{"u", 0.5 * (du[0] + du[1])},
                                                  {"v", 0.5 * (dv[0] + dv[1])}};
        const json& m = doc.member(j, "metric");
        std::array<Expression, 3> g;
        const char* names[3] = {"g11", "g12", "g22"};
        if (m.is_array() && m.size() == 3) {
            for (int i = 0; i < 3; ++i) {
                if (!m[i].is_string()) doc.fail("metric", "metric entries must be expression strings");
                g[i] = doc.expression_text("metric", m[i].get<std::string>(), "", probe);
            }
        } else if (m.is_object()) {
            for (int i = 0; i < 3; ++i) g[i] = doc.expression(m, names[i], "", probe);
        } else {
            doc.fail("metric", "metric must be [g11, g12, g22] or {\"g11\": ..., \"g12\": ..., \"g22\": ...}");
        }
        return Surface::custom(g[0], g[1], g[2], {du[0], du[1], dv[0], dv[1]});
    }
    doc.fail("kind", "unknown surface kind '" + kind + "'");
}

}  // namespace

std::vector<BuiltinSurface> builtin_surfaces() {
    return {
        {"euclidean-plane", "", "flat plane, K = 0"},
        {"unit-sphere", "", "round unit sphere, K = 1, two longitude/latitude charts"},
        {"hyperbolic-half-plane", "", "upper half-plane (dx^2 + dy^2) / y^2, K = -1"},
        {"ellipsoid-of-revolution", "c", "x^2 + y^2 + z^2 / c^2 = 1"},
        {"conformal-perturbation", "base, amplitude, freq[3], phase[3]",
         "exp(2 amplitude f) g_base with f a product of cosines of ambient coordinates"},
        {"custom", "metric, domain", "user metric g11, g12, g22 in u, v on a coordinate box"},
    };
}

Surface parse_surface(const std::string& text, const std::string& source) {
    const Document doc(text, source);
    return surface_from(doc.parse(), doc);
}

Surface load_surface(const std::filesystem::path& path) {
    return parse_surface(read_file(path), path.string());
}

RegularCurve parse_curve(const std::string& text, const std::string& source, const Surface* surface,
                         const std::filesystem::path& base_dir) {
    const Document doc(text, source);
    const json j = doc.parse();
    if (!j.is_object()) doc.fail("", "curve description must be a JSON object");

    std::optional<Surface> own;
    if (!surface) {
        const json& ref = doc.member(j, "surface");
        if (ref.is_string()) own = load_surface(base_dir / ref.get<std::string>());
        else own = surface_from(ref, doc);
        surface = &*own;
    }
    const std::string kind = doc.string(j, "kind");
    const bool closed = j.contains("closed") ? j.at("closed").is_boolean() && j.at("closed").get<bool>()
                                             : false;
    if (j.contains("closed") && !j.at("closed").is_boolean()) doc.fail("closed", "field 'closed' must be a boolean");
    const int chart = j.contains("chart") ? static_cast<int>(doc.number(j, "chart")) : 0;
    if (chart < 0 || chart >= surface->chart_count()) doc.fail("chart", "chart index out of range");

    std::vector<double> range;
    if (j.contains("xi_range")) range = doc.numbers(j.at("xi_range"), "xi_range", 2);

    std::shared_ptr<const CurveMap> map;
    if (kind == "expression") {
        if (range.empty()) doc.fail("kind", "expression curves need 'xi_range'");
        if (!(range[0] < range[1])) doc.fail("xi_range", "xi_range must be increasing");
        const std::map<std::string, double> probe{{"t", range[0]}};
        const Expression u = doc.expression(j, "u", "t", probe);
        const Expression v = doc.expression(j, "v", "t", probe);
        map = expression_curve_map(u, v, chart);
    } else if (kind == "samples") {
        const auto us = doc.numbers(doc.member(j, "u"), "u");
        const auto vs = doc.numbers(doc.member(j, "v"), "v");
        if (us.size() != vs.size()) doc.fail("v", "'u' and 'v' must have the same length");
        if (us.size() < 4) doc.fail("u", "at least 4 samples are required");
        if (range.empty()) range = {0.0, 1.0};
        if (!(range[0] < range[1])) doc.fail("xi_range", "xi_range must be increasing");
        std::vector<ChartPoint> pts;
        for (std::size_t i = 0; i < us.size(); ++i) pts.push_back({chart, us[i], vs[i]});
        map = spline_curve_map(pts, range[0], range[1], closed, surface->chart(chart).u_period());
    } else {
        doc.fail("kind", "curve kind must be 'expression' or 'samples'");
    }
    return RegularCurve(*surface, map, range[0], range[1], closed);
}

RegularCurve load_curve(const std::filesystem::path& path, const Surface* surface) {
    return parse_curve(read_file(path), path.string(), surface, path.parent_path());
}

std::string format_number(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string branch_csv(const CausticBranch& branch) {
    std::string out = "xi,tau,u,v,chart\n";
    for (const auto& c : branch.components)
        for (const auto& s : c.samples)
            out += format_number(s.xi) + ',' + format_number(s.tau) + ',' + format_number(s.point.u) +
                   ',' + format_number(s.point.v) + ',' + std::to_string(s.point.chart) + '\n';
    return out;
}

namespace {

ordered_json point_json(const ChartPoint& p) { return ordered_json::array({p.u, p.v, p.chart}); }

ordered_json branch_json(const CausticBranch& b) {
    ordered_json j;
    j["p"] = b.order;
    j["horizon_hit"] = b.horizon_hit;
    j["left_atlas"] = b.left_atlas;
    j["failed_samples"] = b.failed_samples;
    ordered_json comps = ordered_json::array();
    for (const auto& c : b.components) {
        ordered_json cj;
        cj["xi_begin"] = c.xi_begin;
        cj["xi_end"] = c.xi_end;
        cj["full"] = c.full;
        ordered_json samples = ordered_json::array();
        for (const auto& s : c.samples)
            samples.push_back(ordered_json::array({s.xi, s.tau, s.point.u, s.point.v, s.point.chart}));
        cj["samples"] = samples;
        comps.push_back(cj);
    }
    j["components"] = comps;
    ordered_json sing = ordered_json::array();
    for (const auto& s : b.singularities) {
        ordered_json sj;
        sj["kind"] = to_string(s.kind);
        sj["xi"] = s.xi;
        sj["location"] = point_json(s.location);
        if (s.kind == SingularityRecord::Kind::Cusp) {
            sj["residual"] = s.residual;
            sj["speed"] = s.speed;
        }
        if (s.kind == SingularityRecord::Kind::SelfIntersection) sj["angle"] = s.angle;
        sj["degenerate"] = s.degenerate;
        sing.push_back(sj);
    }
    j["singularities"] = sing;
    return j;
}

}  // namespace

std::string decomposition_json(const EnvelopeDecomposition& d) {
    ordered_json j;
    j["surface"] = d.curve.surface().descriptor().name();
    j["curve"] = {{"length", d.curve.length()}, {"closed", d.curve.closed()}};
    j["t_max"] = d.t_max;
    j["truncated"] = d.truncated;
    ordered_json infl = ordered_json::array();
    for (const auto& g : d.inflectional) {
        ordered_json gj;
        gj["xi"] = g.xi;
        gj["kind"] = g.inflection.kind == InflectionRecord::Kind::Simple ? "simple" : "degenerate";
        gj["slope"] = g.inflection.slope;
        gj["left_atlas"] = g.left_atlas;
        ordered_json pts = ordered_json::array();
        for (std::size_t i = 0; i < g.samples.size(); ++i)
            pts.push_back(ordered_json::array({g.t[i], g.samples[i].u, g.samples[i].v, g.samples[i].chart}));
        gj["samples"] = pts;
        infl.push_back(gj);
    }
    j["inflectional_geodesics"] = infl;
    ordered_json caustics = ordered_json::array();
    for (const auto& b : d.branches)
        if (b.order != 0 && !b.empty()) caustics.push_back(branch_json(b));
    j["caustics"] = caustics;
    ordered_json orders = ordered_json::array();
    for (const auto& b : d.branches) orders.push_back(b.order);
    j["orders"] = orders;
    ordered_json tang = ordered_json::array();
    for (const auto& t : d.self_tangencies)
        tang.push_back({{"orders", {t.order_a, t.order_b}},
                        {"xi", {t.xi_a, t.xi_b}},
                        {"location", point_json(t.location)},
                        {"distance", t.distance},
                        {"angle", t.angle}});
    j["self_tangencies"] = tang;
    return j.dump(2) + "\n";
}

namespace {

class SvgCanvas {
public:
    explicit SvgCanvas(const Surface& s) : s_(s), period_(s.chart(0).u_period()) {}

    /// Appends a polyline in chart-0 coordinates, splitting where a point has no chart-0 image.
    void add(const std::vector<ChartPoint>& pts, bool closed, std::string style) {
        std::vector<Vec2> cur;
        const auto flush = [&] {
            if (cur.size() >= 2) lines_.push_back({cur, style});
            cur.clear();
        };
        for (const auto& p : pts) {
            const auto q = project(p);
            if (!q) {
                flush();
                continue;
            }
            const Vec2 x = *q;
            if (!cur.empty() && std::hypot(x[0] - cur.back()[0], x[1] - cur.back()[1]) > 0.5) {
                if (period_ > 0.0 && std::abs(x[0] - cur.back()[0]) > 0.5 * period_) {
                    // Continue the segment across the seam so the line reaches the chart edge.
                    const double shift = x[0] > cur.back()[0] ? -period_ : period_;
                    cur.push_back({x[0] + shift, x[1]});
                    lines_.push_back({cur, style});
                    cur = {{cur[cur.size() - 2][0] - shift, cur[cur.size() - 2][1]}};
                } else {
                    flush();
                }
            }
            cur.push_back(x);
            grow(x);
        }
        if (closed && !cur.empty() && cur.size() == pts.size() &&
            std::hypot(cur.front()[0] - cur.back()[0], cur.front()[1] - cur.back()[1]) <= 0.5)
            cur.push_back(cur.front());
        flush();
    }

    void mark(const ChartPoint& p, bool cusp) {
        if (const auto q = project(p)) marks_.push_back({*q, cusp});
    }

    std::string render() const {
        double u0 = lo_[0], u1 = hi_[0], v0 = lo_[1], v1 = hi_[1];
        if (!(u1 >= u0)) u0 = -1, u1 = 1, v0 = -1, v1 = 1;
        if (period_ > 0.0) u0 = 0.0, u1 = period_;
        const double span = std::max({u1 - u0, v1 - v0, 1e-6});
        const double pad = 0.05 * span;
        u0 -= pad, u1 += pad, v0 -= pad, v1 += pad;
        const double width = 800.0;
        const double scale = width / (u1 - u0);
        const double height = std::max(1.0, (v1 - v0) * scale);
        const auto X = [&](double u) { return (u - u0) * scale; };
        const auto Y = [&](double v) { return (v1 - v) * scale; };
        char buf[256];
        std::string out;
        std::snprintf(buf, sizeof buf,
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                      "viewBox=\"0 0 %.0f %.0f\">\n",
                      width, height, width, height);
        out += buf;
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        const Box b = s_.chart(0).domain();
        const auto hline = [&](double v, const char* dash) {
            if (v > v0 && v < v1) {
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"0\" y1=\"%.3f\" x2=\"%.0f\" y2=\"%.3f\" stroke=\"#999\" "
                              "stroke-width=\"1\"%s/>\n",
                              Y(v), width, Y(v), dash);
                out += buf;
            }
        };
        const auto vline = [&](double u) {
            if (u > u0 && u < u1) {
                std::snprintf(buf, sizeof buf,
                              "<line x1=\"%.3f\" y1=\"0\" x2=\"%.3f\" y2=\"%.0f\" stroke=\"#999\" "
                              "stroke-width=\"1\"/>\n",
                              X(u), X(u), height);
                out += buf;
            }
        };
        hline(b.v0, "");
        hline(b.v1, "");
        vline(b.u0);
        vline(b.u1);
        if (s_.chart_count() > 1) {
            hline(-kSphereChartLatitudeLimit, " stroke-dasharray=\"4 4\"");
            hline(kSphereChartLatitudeLimit, " stroke-dasharray=\"4 4\"");
        }
        for (const auto& l : lines_) {
            out += "<polyline fill=\"none\" " + l.style + " points=\"";
            for (std::size_t i = 0; i < l.pts.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", i ? " " : "", X(l.pts[i][0]), Y(l.pts[i][1]));
                out += buf;
            }
            out += "\"/>\n";
        }
        for (const auto& m : marks_) {
            if (m.cusp)
                std::snprintf(buf, sizeof buf,
                              "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"4\" fill=\"none\" stroke=\"#d62728\"/>\n",
                              X(m.x[0]), Y(m.x[1]));
            else
                std::snprintf(buf, sizeof buf,
                              "<rect x=\"%.3f\" y=\"%.3f\" width=\"7\" height=\"7\" fill=\"none\" "
                              "stroke=\"#1f77b4\"/>\n",
                              X(m.x[0]) - 3.5, Y(m.x[1]) - 3.5);
            out += buf;
        }
        out += "</svg>\n";
        return out;
    }

private:
    struct Line {
        std::vector<Vec2> pts;
        std::string style;
    };
    struct Mark {
        Vec2 x;
        bool cusp;
    };

    std::optional<Vec2> project(const ChartPoint& p) const {
        try {
            const ChartPoint q = p.chart == 0 ? p : s_.to_chart(p, 0);
            if (!std::isfinite(q.u) || !std::isfinite(q.v)) return std::nullopt;
            if (period_ > 0.0) return Vec2{q.u - period_ * std::floor(q.u / period_), q.v};
            return q.coords();
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    void grow(const Vec2& x) {
        for (int d = 0; d < 2; ++d) {
            lo_[d] = std::min(lo_[d], x[d]);
            hi_[d] = std::max(hi_[d], x[d]);
        }
    }

    const Surface& s_;
    double period_;
    Vec2 lo_{HUGE_VAL, HUGE_VAL}, hi_{-HUGE_VAL, -HUGE_VAL};
    std::vector<Line> lines_;
    std::vector<Mark> marks_;
};

const char* order_color(int p) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    return palette[(std::abs(p) - 1) % 6];
}

}  // namespace

std::string decomposition_svg(const EnvelopeDecomposition& d) {
    SvgCanvas canvas(d.curve.surface());
    for (const auto& g : d.inflectional)
        canvas.add(g.samples, false, "stroke=\"#555\" stroke-width=\"1\" stroke-dasharray=\"6 4\"");
    for (const auto& b : d.branches) {
        if (b.order == 0) continue;
        const std::string style = std::string("stroke=\"") + order_color(b.order) + "\" stroke-width=\"1.5\"";
        for (const auto& c : b.components) {
            std::vector<ChartPoint> pts;
            for (const auto& s : c.samples) pts.push_back(s.point);
            canvas.add(pts, c.full, style);
        }
        for (const auto& s : b.singularities)
            if (s.kind != SingularityRecord::Kind::Inflection)
                canvas.mark(s.location, s.kind == SingularityRecord::Kind::Cusp);
    }
    std::vector<ChartPoint> curve;
    const int n = 512;
    for (int i = 0; i < (d.curve.closed() ? n : n + 1); ++i)
        curve.push_back(d.curve.point(d.curve.xi_min() + d.curve.length() * i / n));
    canvas.add(curve, d.curve.closed(), "stroke=\"black\" stroke-width=\"2\"");
    return canvas.render();
}

}  // namespace geocaustic
