#include "geocaustic/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "geocaustic/io.hpp"
#include "geocaustic/stability.hpp"

namespace geocaustic {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void RunConfig::validate() const {
    const auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
    if (p_min > p_max) bad("p-range must satisfy A <= B");
    if (grid_n < 64) bad("grid must be at least 64");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) bad("t-max must be positive");
    if (!(epsilon > 0.0)) bad("epsilon must be positive");
    if (!(tol > 0.0)) bad("tol must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold must lie in [0, 1]");
    if (jobs < 1) bad("jobs must be at least 1");
    if (seeds < 1) bad("seeds must be at least 1");
    for (const auto& f : formats)
        if (f != "csv" && f != "json" && f != "svg") bad("unknown format '" + f + "'");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) bad("lambdas must be finite and non-negative");
}

bool RunConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::pair<int, int> parse_p_range(const std::string& text) {
    const auto dots = text.find("..");
    const auto fail = [&] {
        throw Error(ErrorKind::InvalidArgument, "p-range '" + text + "' must look like A..B");
    };
    if (dots == std::string::npos) fail();
    try {
        std::size_t n1 = 0, n2 = 0;
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const int lo = std::stoi(a, &n1), hi = std::stoi(b, &n2);
        if (n1 != a.size() || n2 != b.size()) fail();
        return {lo, hi};
    } catch (const std::logic_error&) {
        fail();
    }
    return {0, 0};
}

void apply_config(RunConfig& c, const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') line++, column = 1;
            else column++;
        }
        throw ParseError("invalid JSON config", source, line, column);
    }
    const auto fail = [&](const std::string& key, const std::string& msg) {
        int line = 0, column = 0;
        const auto at = text.find('"' + key + '"');
        if (at != std::string::npos) {
            line = 1, column = 1;
            for (std::size_t i = 0; i < at; ++i) {
                if (text[i] == '\n') line++, column = 1;
                else column++;
            }
        }
        throw ParseError(msg, source, line, column);
    };
    if (!j.is_object()) fail("", "config must be a JSON object");
    const fs::path dir = fs::path(source).parent_path();
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "surface") c.surface = dir / v.get<std::string>();
            else if (key == "curve") c.curve = dir / v.get<std::string>();
            else if (key == "p_range") {
                if (v.is_string()) std::tie(c.p_min, c.p_max) = parse_p_range(v.get<std::string>());
                else c.p_min = v.at(0).get<int>(), c.p_max = v.at(1).get<int>();
            } else if (key == "grid") c.grid_n = v.get<int>();
            else if (key == "t_max") c.t_max = v.get<double>();
            else if (key == "epsilon") c.epsilon = v.get<double>();
            else if (key == "tol") c.tol = v.get<double>();
            else if (key == "threshold") c.threshold = v.get<double>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "format") c.formats = v.get<std::vector<std::string>>();
            else if (key == "jobs") c.jobs = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "seeds") c.seeds = v.get<int>();
            else if (key == "lambdas") c.lambdas = v.get<std::vector<double>>();
            else if (key == "lambda_threshold") c.lambda_threshold = v.get<double>();
            else if (key == "xi") c.xi = v.get<double>();
            else fail(key, "unknown config key '" + key + "'");
        } catch (const json::exception&) {
            fail(key, "config key '" + key + "' has the wrong type");
        } catch (const Error& e) {
            if (dynamic_cast<const ParseError*>(&e)) throw;
            fail(key, e.what());
        }
    }
}

namespace {

/// Collects output files in a sibling directory and moves them into place only on commit.
class Staging {
public:
    explicit Staging(fs::path out) : out_(std::move(out)) {
        std::random_device rd;
        std::ostringstream name;
        name << '.' << out_.filename().string() << ".staging-" << std::hex << rd() << rd();
        tmp_ = (out_.has_parent_path() ? out_.parent_path() : fs::path(".")) / name.str();
    }
    ~Staging() {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;

    void add(const std::string& name, const std::string& content) { files_.push_back({name, content}); }

    std::vector<fs::path> commit() {
        fs::create_directories(tmp_);
        for (const auto& [name, content] : files_) {
            std::ofstream f(tmp_ / name, std::ios::binary);
            f << content;
            if (!f) throw std::runtime_error("cannot write " + (tmp_ / name).string());
        }
        fs::create_directories(out_);
        std::vector<fs::path> written;
        for (const auto& [name, content] : files_) {
            fs::rename(tmp_ / name, out_ / name);
            written.push_back(out_ / name);
        }
        return written;
    }

private:
    fs::path out_, tmp_;
    std::vector<std::pair<std::string, std::string>> files_;
};

struct Inputs {
    std::optional<Surface> surface;
    RegularCurve curve;
};

Inputs load_inputs(const RunConfig& c) {
    if (c.curve.empty()) throw Error(ErrorKind::InvalidArgument, "--curve is required");
    std::optional<Surface> s;
    if (!c.surface.empty()) s = load_surface(c.surface);
    RegularCurve curve = load_curve(c.curve, s ? &*s : nullptr);
    return {s, curve};
}

EnvelopeOptions envelope_options(const RunConfig& c) {
    EnvelopeOptions o;
    o.trace.grid_n = c.grid_n;
    o.trace.t_max = c.t_max;
    o.trace.jobs = c.jobs;
    o.inflections.grid_n = std::max(o.inflections.grid_n, c.grid_n);
    return o;
}

std::string branch_file(int p) { return "branch_p" + std::to_string(p) + ".csv"; }

void report_written(const std::vector<fs::path>& files, std::ostream& log) {
    for (const auto& f : files) log << "wrote " << f.string() << '\n';
}

template <class F>
int guarded(std::ostream& log, F&& body) {
    try {
        return body();
    } catch (const ParseError& e) {
        log << "error: " << e.describe() << '\n';
        return kExitParse;
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::Parse:
            case ErrorKind::InvalidArgument:
            case ErrorKind::EmptyInput:
                log << "error: " << e.what() << '\n';
                return kExitParse;
            case ErrorKind::ConvexityViolation:
                log << "error: convexity violation: " << e.what();
                if (!std::isnan(e.where())) log << " (lambda = " << format_number(e.where()) << ')';
                log << '\n';
                return kExitConvexity;
            default:
                log << "error: numerical failure: " << e.what();
                if (!std::isnan(e.where())) log << " at xi = " << format_number(e.where());
                log << '\n';
                return kExitNumerical;
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace

int cmd_trace(const RunConfig& c, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        c.validate();
        const Inputs in = load_inputs(c);
        const EnvelopeDecomposition d = assemble_envelope(in.curve, c.p_min, c.p_max, envelope_options(c));
        Staging stage(c.out);
        for (const auto& b : d.branches) {
            if (b.order == 0 || b.empty()) continue;
            std::size_t cusps = 0, crossings = 0;
            for (const auto& s : b.singularities) {
                cusps += s.kind == SingularityRecord::Kind::Cusp;
                crossings += s.kind == SingularityRecord::Kind::SelfIntersection;
            }
            log << "p = " << b.order << ": " << b.components.size() << " component(s), "
                << b.sample_count() << " samples, " << cusps << " cusp(s), " << crossings
                << " self-intersection(s)";
            if (b.failed_samples) log << ", " << b.failed_samples << " failed sample(s)";
            log << '\n';
            if (c.wants("csv")) stage.add(branch_file(b.order), branch_csv(b));
        }
        log << d.inflectional.size() << " inflectional geodesic(s)";
        if (d.truncated) log << ", truncated at T_max = " << format_number(d.t_max);
        log << '\n';
        if (c.wants("json")) stage.add("decomposition.json", decomposition_json(d));
        if (c.wants("svg")) stage.add("decomposition.svg", decomposition_svg(d));
        report_written(stage.commit(), log);
        return kExitOk;
    });
}

int cmd_verify(const RunConfig& c, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        c.validate();
        const Inputs in = load_inputs(c);
        const EnvelopeDecomposition d = assemble_envelope(in.curve, c.p_min, c.p_max, envelope_options(c));
        NaifOptions naif;
        naif.jobs = c.jobs;
        const Theorem1Report r = verify_theorem1(d, c.epsilon, c.tol, naif);

        bool pass = !d.truncated && r.coverage >= c.threshold && r.membership >= c.threshold;
        for (double f : r.inflectional_coverage) pass = pass && f >= c.threshold;

        ordered_json pencils = ordered_json::array();
        PencilOptions po;
        po.t_max = c.t_max;
        po.jobs = c.jobs;
        if (c.p_min <= -1 || c.p_max >= 1) {
            const int p = 1;
            const PencilReport pr = pencil_caustic_crosscheck(d.curve, p, po);
            const bool ok = pr.trivially_consistent || pr.hausdorff <= c.tol;
            pass = pass && ok;
            pencils.push_back({{"p", p},
                               {"envelope_points", pr.envelope_points},
                               {"fallbacks", pr.fallbacks},
                               {"hausdorff", pr.hausdorff},
                               {"trivially_consistent", pr.trivially_consistent},
                               {"pass", ok}});
        }
        ordered_json inflections = ordered_json::array();
        if (const CausticBranch* b1 = d.branch(1); b1 && !b1->empty()) {
            const CorrespondenceReport cr = inflection_correspondence(d.curve, *b1, 1e-2);
            pass = pass && cr.unmatched == 0;
            for (const auto& m : cr.matches)
                inflections.push_back({{"xi", m.xi},
                                       {"inside_domain", m.inside_domain},
                                       {"matched", m.matched},
                                       {"branch_xi", m.branch_xi}});
        }

        ordered_json j;
        j["epsilon"] = c.epsilon;
        j["tol"] = c.tol;
        j["threshold"] = c.threshold;
        j["t_max"] = c.t_max;
        j["truncated"] = d.truncated;
        j["cloud_size"] = r.cloud_size;
        j["decomposition_size"] = r.decomposition_size;
        j["coverage"] = r.coverage;
        j["membership"] = r.membership;
        j["max_cloud_distance"] = r.max_cloud_distance;
        j["inflectional_coverage"] = r.inflectional_coverage;
        const auto offenders = [](const std::vector<Offender>& v) {
            ordered_json a = ordered_json::array();
            for (const auto& o : v)
                a.push_back({{"location", {o.point.u, o.point.v, o.point.chart}},
                             {"distance", o.distance},
                             {"xi", o.xi},
                             {"t", o.t},
                             {"source", o.source}});
            return a;
        };
        j["coverage_offenders"] = offenders(r.coverage_offenders);
        j["membership_offenders"] = offenders(r.membership_offenders);
        j["pencil"] = pencils;
        j["inflection_correspondence"] = inflections;
        j["pass"] = pass;

        log << "coverage " << format_number(r.coverage) << ", membership " << format_number(r.membership)
            << " (cloud " << r.cloud_size << ", decomposition " << r.decomposition_size << ")\n";
        for (std::size_t k = 0; k < r.inflectional_coverage.size(); ++k)
            log << "inflectional geodesic " << k << " covered " << format_number(r.inflectional_coverage[k]) << '\n';
        if (d.truncated) log << "decomposition truncated at T_max = " << format_number(c.t_max) << '\n';
        log << (pass ? "PASS" : "FAIL") << '\n';

        Staging stage(c.out);
        stage.add("verify.json", j.dump(2) + "\n");
        report_written(stage.commit(), log);
        return pass ? kExitOk : kExitBelowThreshold;
    });
}

int cmd_stability(const RunConfig& c, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        c.validate();
        if (c.lambdas.empty()) throw Error(ErrorKind::InvalidArgument, "no lambdas");
        const Inputs in = load_inputs(c);
        StabilityOptions so;
        so.trace.grid_n = c.grid_n;
        so.trace.t_max = c.t_max;
        so.jobs = c.jobs;
        std::vector<std::uint64_t> seeds;
        for (int k = 0; k < c.seeds; ++k) seeds.push_back(c.seed + static_cast<std::uint64_t>(k));
        const double limit =
            c.lambda_threshold.value_or(*std::max_element(c.lambdas.begin(), c.lambdas.end()));

        std::vector<StabilityReport> all;
        for (int p = c.p_min; p <= c.p_max; ++p) {
            if (p == 0) continue;
            const auto reports = stability_experiment(in.curve, p, c.lambdas, seeds, so);
            all.insert(all.end(), reports.begin(), reports.end());
        }
        bool pass = true;
        for (const auto& r : all) {
            log << "p = " << r.p << ", lambda = " << format_number(r.lambda) << ", seed " << r.seed
                << ": cusps " << r.base_counts.cusps << " -> " << r.perturbed_counts.cusps
                << ", self-intersections " << r.base_counts.self_intersections << " -> "
                << r.perturbed_counts.self_intersections << ", hausdorff "
                << format_number(r.hausdorff) << ", " << to_string(r.verdict) << '\n';
            if (r.lambda <= limit && r.verdict != Verdict::Stable) pass = false;
        }
        Staging stage(c.out);
        if (c.wants("csv")) stage.add("stability.csv", stability_csv(all));
        if (c.wants("json")) stage.add("stability.json", stability_json(all));
        report_written(stage.commit(), log);
        return pass ? kExitOk : kExitBelowThreshold;
    });
}

int cmd_surfaces(const RunConfig&, std::ostream& log, std::ostream&) {
    for (const auto& s : builtin_surfaces()) {
        log << std::left << std::setw(26) << s.kind << s.description;
        if (!s.params.empty()) log << " [params: " << s.params << ']';
        log << '\n';
    }
    return kExitOk;
}

int cmd_conjugate(const RunConfig& c, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        c.validate();
        const Inputs in = load_inputs(c);
        const RegularCurve curve = in.curve.arc_length_reparameterize();
        if (c.xi < curve.xi_min() || c.xi > curve.xi_max())
            throw Error(ErrorKind::InvalidArgument, "xi outside the curve parameter range");
        const UnitTangent seed = tangent_geodesic_seed(curve, c.xi);
        std::string csv = "p,tau,u,v,chart\n";
        for (int p = c.p_min; p <= c.p_max; ++p) {
            if (p == 0) continue;
            const auto rec = conjugate_point(curve.surface(), seed, p, c.t_max);
            if (!rec) {
                log << "p = " << p << ": none within T_max\n";
                continue;
            }
            log << "p = " << p << ": tau = " << format_number(rec->tau) << " at (" << format_number(rec->point.u)
                << ", " << format_number(rec->point.v) << ") chart " << rec->point.chart << '\n';
            csv += std::to_string(p) + ',' + format_number(rec->tau) + ',' + format_number(rec->point.u) + ',' +
                   format_number(rec->point.v) + ',' + std::to_string(rec->point.chart) + '\n';
        }
        if (c.wants("csv")) {
            Staging stage(c.out);
            stage.add("conjugate.csv", csv);
            report_written(stage.commit(), log);
        }
        return kExitOk;
    });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tangential caustics and geodesic envelopes of curves on surfaces", "geocaustic"};
    app.require_subcommand(1);

    std::string surface, curve, p_range, out_dir, config_path;
    std::vector<std::string> formats;
    std::vector<double> lambdas;
    int grid = 0, jobs = 0, seeds = 0;
    double t_max = 0, epsilon = 0, tol = 0, threshold = 0, lambda_threshold = 0, xi = 0;
    std::uint64_t seed = 0;

    struct Flags {
        CLI::Option *surface, *curve, *p_range, *grid, *t_max, *epsilon, *tol, *out, *format, *jobs,
            *seed, *config, *threshold = nullptr, *seeds = nullptr, *lambdas = nullptr,
            *lambda_threshold = nullptr, *xi = nullptr;
    };
    std::map<CLI::App*, Flags> flags;
    const auto common = [&](CLI::App* sub) {
        Flags f{};
        f.surface = sub->add_option("--surface", surface, "surface JSON file");
        f.curve = sub->add_option("--curve", curve, "curve JSON file");
        f.p_range = sub->add_option("--p-range", p_range, "order range A..B (default -2..2)");
        f.grid = sub->add_option("--grid", grid, "grid size along the curve (default 512)");
        f.t_max = sub->add_option("--t-max", t_max, "geodesic horizon (default 50)");
        f.epsilon = sub->add_option("--epsilon", epsilon, "naif parameter offset (default 1e-4)");
        f.tol = sub->add_option("--tol", tol, "distance tolerance (default 1e-3)");
        f.out = sub->add_option("--out", out_dir, "output directory (default out)");
        f.format = sub->add_option("--format", formats, "csv|json|svg, repeatable (default all)")
                       ->check(CLI::IsMember({"csv", "json", "svg"}));
        f.jobs = sub->add_option("--jobs", jobs, "worker threads (default 1)");
        f.seed = sub->add_option("--seed", seed, "random seed (default 1)");
        f.config = sub->add_option("--config", config_path, "JSON config file (env GEOCAUSTIC_CONFIG)");
        return f;
    };
    auto* trace = app.add_subcommand("trace", "trace caustics and assemble the envelope");
    flags[trace] = common(trace);
    auto* verify = app.add_subcommand("verify", "check the envelope decomposition against a naif cloud");
    flags[verify] = common(verify);
    flags[verify].threshold =
        verify->add_option("--threshold", threshold, "minimum coverage and membership (default 0.99)");
    auto* stability = app.add_subcommand("stability", "singularity stability under perturbations");
    flags[stability] = common(stability);
    flags[stability].seeds = stability->add_option("--seeds", seeds, "number of seeds (default 1)");
    flags[stability].lambdas =
        stability->add_option("--lambda", lambdas, "perturbation sizes (default 0 1e-4 1e-3)");
    flags[stability].lambda_threshold = stability->add_option(
        "--lambda-threshold", lambda_threshold, "largest lambda required to be stable (default max)");
    auto* surfaces = app.add_subcommand("surfaces", "list built-in surfaces");
    auto* conjugate = app.add_subcommand("conjugate", "conjugate distances along one tangent geodesic");
    flags[conjugate] = common(conjugate);
    flags[conjugate].xi = conjugate->add_option("--xi", xi, "arc-length parameter on the curve (default 0)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    }

    if (surfaces->parsed()) return cmd_surfaces(RunConfig{}, out, err);

    CLI::App* sub = trace->parsed() ? trace : verify->parsed() ? verify : stability->parsed() ? stability : conjugate;
    const Flags& f = flags[sub];
    RunConfig c;
    c.command = sub->get_name();
    const int code = guarded(err, [&] {
        std::string cfg = f.config->count() ? config_path : std::string();
        if (cfg.empty())
            if (const char* env = std::getenv("GEOCAUSTIC_CONFIG")) cfg = env;
        if (!cfg.empty()) {
            std::ifstream in(cfg, std::ios::binary);
            if (!in) throw ParseError("cannot read config file", cfg, 0, 0);
            std::ostringstream text;
            text << in.rdbuf();
            apply_config(c, text.str(), cfg);
        }
        if (f.surface->count()) c.surface = surface;
        if (f.curve->count()) c.curve = curve;
        if (f.p_range->count()) std::tie(c.p_min, c.p_max) = parse_p_range(p_range);
        if (f.grid->count()) c.grid_n = grid;
        if (f.t_max->count()) c.t_max = t_max;
        if (f.epsilon->count()) c.epsilon = epsilon;
        if (f.tol->count()) c.tol = tol;
        if (f.out->count()) c.out = out_dir;
        if (f.format->count()) c.formats = formats;
        if (f.jobs->count()) c.jobs = jobs;
        if (f.seed->count()) c.seed = seed;
        if (f.threshold && f.threshold->count()) c.threshold = threshold;
        if (f.seeds && f.seeds->count()) c.seeds = seeds;
        if (f.lambdas && f.lambdas->count()) c.lambdas = lambdas;
        if (f.lambda_threshold && f.lambda_threshold->count()) c.lambda_threshold = lambda_threshold;
        if (f.xi && f.xi->count()) c.xi = xi;
        c.validate();
        return kExitOk;
    });
    if (code != kExitOk) return code;

    if (sub == trace) return cmd_trace(c, out, err);
    if (sub == verify) return cmd_verify(c, out, err);
    if (sub == stability) return cmd_stability(c, out, err);
    return cmd_conjugate(c, out, err);
}

}  // namespace geocaustic
