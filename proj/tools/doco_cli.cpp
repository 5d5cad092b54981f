#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "doco/experiment.hpp"
#include "doco/invariants.hpp"
#include "doco/output.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_bound = 3;
constexpr int exit_invariant = 4;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    bool strict = false;
    std::string out_dir;
    std::string format = "json";
};

doco::json load_json(const std::string& path)
{
    if (path.empty())
        throw doco::ConfigError("--config is required");
    std::ifstream in(path);
    if (!in)
        throw doco::ConfigError("cannot open config '" + path + "'");
    try {
        return doco::json::parse(in);
    }
    catch (const doco::json::exception& e) {
        throw doco::ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

doco::ExperimentConfig load_config(const Common& c)
{
    auto cfg = doco::config_from_json(load_json(c.config_path));
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.trials) {
        if (*c.trials < 1)
            throw doco::ConfigError("--trials must be >= 1");
        cfg.repetitions = *c.trials;
    }
    return cfg;
}

void emit(const Common& c, const std::string& file, const std::string& text)
{
    if (c.out_dir.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n')
            std::cout << '\n';
        return;
    }
    std::filesystem::create_directories(c.out_dir);
    const auto path = std::filesystem::path(c.out_dir) / file;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n')
        out << '\n';
}

int cmd_run(const Common& c)
{
    const auto cfg = load_config(c);
    const auto report = doco::run(cfg);
    if (c.format == "csv") {
        if (c.out_dir.empty() && report.traces.size() > 1)
            throw doco::ConfigError("csv output of several repetitions needs --out");
        for (std::size_t i = 0; i < report.traces.size(); ++i)
            emit(c, "trace_" + std::to_string(i) + ".csv", doco::to_csv(report.traces[i]));
        if (!c.out_dir.empty())
            emit(c, "summary.json", report.summary.dump(2));
    }
    else {
        emit(c, "summary.json", report.summary.dump(2));
    }
    if (report.violated) {
        std::cerr << "bound violation in at least one run\n";
        if (c.strict)
            return exit_bound;
    }
    return exit_ok;
}

std::string sweep_csv(const doco::json& rows)
{
    static const char* columns[] = {"d",
                                    "T",
                                    "P",
                                    "learner",
                                    "repetitions",
                                    "S_mean",
                                    "sum_m_mean",
                                    "P_T_mean",
                                    "regret_dynamic_mean",
                                    "regret_dynamic_stderr",
                                    "regret_static_mean",
                                    "regret_static_stderr",
                                    "bound_cor1_mean",
                                    "bound_thm2_mean",
                                    "bound_dogd_dt_mean",
                                    "bound_mild_dt_mean",
                                    "bound_lower_mean",
                                    "bound_lemma3_mean",
                                    "bound_violations",
                                    "loss_digest"};
    std::ostringstream os;
    for (std::size_t i = 0; i < std::size(columns); ++i)
        os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < std::size(columns); ++i) {
            if (i)
                os << ',';
            if (!row.contains(columns[i]))
                continue;
            const auto& v = row.at(columns[i]);
            if (v.is_number_float())
                os << doco::format_double(v.get<double>());
            else if (v.is_string())
                os << v.get<std::string>();
            else
                os << v.dump();
        }
        os << '\n';
    }
    return os.str();
}

int cmd_sweep(const Common& c)
{
    const auto cfg = load_config(c);
    if (!cfg.sweep)
        throw doco::ConfigError("sweep needs a 'sweep' grid in the config");
    const auto report = doco::sweep(cfg, *cfg.sweep);
    if (c.format == "csv")
        emit(c, "sweep.csv", sweep_csv(report.rows));
    else
        emit(c, "sweep.json", doco::json{{"config", doco::to_json(cfg)}, {"cells", report.rows}}.dump(2));
    if (report.violated) {
        std::cerr << "bound violation in at least one sweep cell\n";
        if (c.strict)
            return exit_bound;
    }
    return exit_ok;
}

struct LowerBoundArgs {
    doco::Round T = 1000;
    doco::Round d = 1;
    std::size_t n = 1;
    double D = 2.0;
    double G = 1.0;
    std::string learner = "dogd";
};

int cmd_lowerbound(const Common& c, LowerBoundArgs a)
{
    std::uint64_t seed = c.seed.value_or(0);
    int trials = c.trials.value_or(200);
    doco::LearnerSpec learner{doco::learner_kind_from_string(a.learner), {}, {}, {}};
    if (!c.config_path.empty()) {
        const auto cfg = load_config(c);
        const auto* blocks = std::get_if<doco::LowerBoundBlocks>(&cfg.delay);
        if (!blocks)
            throw doco::ConfigError("lowerbound config needs delay kind 'lowerbound_blocks'");
        a.T = cfg.T;
        a.d = blocks->d;
        a.n = cfg.n;
        a.D = cfg.D;
        a.G = cfg.G;
        learner = cfg.learner;
        seed = cfg.seed;
        if (!c.trials)
            trials = cfg.repetitions;
    }
    const auto report = doco::lowerbound(a.T, a.d, a.D, a.G, a.n, learner, trials, seed);
    if (c.format == "csv") {
        const auto& s = report.summary;
        std::ostringstream os;
        os << "T,d,trials,mean_static_regret,stderr,bound_lemma3,status\n"
           << a.T << ',' << a.d << ',' << trials << ',' << doco::format_double(s["mean_static_regret"].get<double>())
           << ',' << doco::format_double(s["stderr"].get<double>()) << ','
           << doco::format_double(s["bound_lemma3"].get<double>()) << ','
           << (report.pass ? (*report.pass ? "PASS" : "FAIL") : "") << '\n';
        emit(c, "lowerbound.csv", os.str());
    }
    else {
        emit(c, "lowerbound.json", report.summary.dump(2));
    }
    if (c.strict && report.pass && !*report.pass)
        return exit_bound;
    return exit_ok;
}

int cmd_verify(const Common& c, const std::string& fault)
{
    doco::VerifyOptions o;
    if (c.seed)
        o.seed = *c.seed;
    if (fault == "hedge_normalization")
        o.corrupt_hedge_normalization = true;
    else if (!fault.empty())
        throw doco::ConfigError("unknown fault '" + fault + "' (expected hedge_normalization)");
    bool ok = true;
    for (const auto& r : doco::verify(o)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.passed)
            std::cout << " :: " << r.detail;
        std::cout << '\n';
        ok = ok && r.passed;
    }
    return ok ? exit_ok : exit_invariant;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delayed online convex optimization experiments"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON experiment config");
        sub->add_option("--seed", common.seed, "Base seed (overrides the config)");
        sub->add_option("--trials", common.trials, "Repetitions / sign draws");
        sub->add_flag("--strict", common.strict, "Exit 3 when a measured regret exceeds its bound");
        sub->add_option("--out", common.out_dir, "Output directory (default: stdout)");
        sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    };

    auto* run = app.add_subcommand("run", "Run one configuration");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "Run the config's sweep grid");
    add_common(sweep);
    auto* lower = app.add_subcommand("lowerbound", "Average static regret on adversarial block instances");
    add_common(lower);
    LowerBoundArgs lb;
    lower->add_option("--T", lb.T, "Horizon");
    lower->add_option("--d", lb.d, "Block length / maximum delay");
    lower->add_option("--n", lb.n, "Dimension");
    lower->add_option("--D", lb.D, "Diameter");
    lower->add_option("--G", lb.G, "Gradient bound");
    lower->add_option("--learner", lb.learner, "Learner kind");
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    add_common(verify);
    std::string fault;
    verify->add_option("--inject-fault", fault, "Test hook: hedge_normalization");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (run->parsed())
            return cmd_run(common);
        if (sweep->parsed())
            return cmd_sweep(common);
        if (lower->parsed())
            return cmd_lowerbound(common, lb);
        return cmd_verify(common, fault);
    }
    catch (const doco::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
