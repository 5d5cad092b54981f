#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "delay.hpp"
#include "doubling.hpp"
#include "environments.hpp"
#include "geometry.hpp"
#include "learners.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "mild_ogd.hpp"
#include "rng.hpp"

namespace doco {

using json = nlohmann::json;

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LearnerKind { ogd, dogd, dogd_dt, mild, mild_dt };

inline std::string to_string(LearnerKind k)
{
    switch (k) {
    case LearnerKind::ogd: return "ogd";
    case LearnerKind::dogd: return "dogd";
    case LearnerKind::dogd_dt: return "dogd_dt";
    case LearnerKind::mild: return "mild";
    case LearnerKind::mild_dt: return "mild_dt";
    }
    return "?";
}

inline LearnerKind learner_kind_from_string(const std::string& s)
{
    if (s == "ogd") return LearnerKind::ogd;
    if (s == "dogd") return LearnerKind::dogd;
    if (s == "dogd_dt") return LearnerKind::dogd_dt;
    if (s == "mild") return LearnerKind::mild;
    if (s == "mild_dt") return LearnerKind::mild_dt;
    throw ConfigError("unknown learner '" + s + "' (expected ogd, dogd, dogd_dt, mild, mild_dt)");
}

/// Rates left empty resolve from the schedule ("tuned" rates).
struct LearnerSpec {
    LearnerKind kind = LearnerKind::dogd;
    std::optional<double> eta;
    std::optional<double> alpha;
    std::optional<std::vector<double>> grid;
};

struct DriftEnvSpec {
    double step = 0.0;
    DriftLoss loss = DriftLoss::quadratic;
};
struct LowerBoundEnvSpec {
    std::optional<std::string> instance_file;
};
/// Explicit linear losses f_t(x) = <g_t, x>.
struct LinearEnvSpec {
    std::vector<std::vector<double>> gradients;
};
using EnvironmentSpec = std::variant<DriftEnvSpec, LowerBoundEnvSpec, LinearEnvSpec>;

struct EnvComparators {};
struct BestFixedComparators {};
struct FixedComparators {
    std::vector<double> point;
};
struct PiecewiseBestComparators {
    double P = 0.0;
};
struct ListComparators {
    std::vector<std::vector<double>> points;
};
using ComparatorSpec =
    std::variant<EnvComparators, BestFixedComparators, FixedComparators, PiecewiseBestComparators, ListComparators>;

struct SweepGrid {
    std::vector<Round> d;
    std::vector<Round> T;
    std::vector<double> P;
    std::vector<LearnerKind> learner;

    bool empty() const { return d.empty() && T.empty() && P.empty() && learner.empty(); }
};

struct ExperimentConfig {
    Round T = 100;
    std::size_t n = 1;
    double D = 2.0;
    double G = 1.0;
    LearnerSpec learner;
    DelaySpec delay = ConstantDelay{1};
    EnvironmentSpec environment = DriftEnvSpec{};
    std::optional<ComparatorSpec> comparators;
    std::uint64_t seed = 0;
    int repetitions = 1;
    std::optional<SweepGrid> sweep;
};

// ---------------------------------------------------------------------------
// JSON <-> config

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T require(const json& j, const char* key, const char* context)
{
    if (!j.contains(key))
        throw ConfigError(std::string(context) + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string(context) + " field '" + key + "': " + e.what());
    }
}

inline std::optional<double> parse_rate(const json& j, const char* key)
{
    if (!j.contains(key))
        return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "tuned")
            return std::nullopt;
        throw ConfigError(std::string("learner field '") + key + "' must be a number or \"tuned\"");
    }
    if (!v.is_number())
        throw ConfigError(std::string("learner field '") + key + "' must be a number or \"tuned\"");
    const double x = v.get<double>();
    if (!(x > 0.0))
        throw ConfigError(std::string("learner field '") + key + "' must be positive");
    return x;
}

inline LearnerSpec parse_learner(const json& j)
{
    LearnerSpec spec;
    if (j.is_string()) {
        spec.kind = learner_kind_from_string(j.get<std::string>());
        return spec;
    }
    if (!j.is_object())
        throw ConfigError("learner must be a string or an object");
    spec.kind = learner_kind_from_string(require<std::string>(j, "kind", "learner"));
    spec.eta = parse_rate(j, "eta");
    spec.alpha = parse_rate(j, "alpha");
    if (j.contains("grid"))
        spec.grid = require<std::vector<double>>(j, "grid", "learner");
    return spec;
}

inline DelaySpec parse_delay(const json& j)
{
    if (j.is_array())
        return ExplicitDelays{j.get<std::vector<Round>>()};
    if (!j.is_object())
        throw ConfigError("delay must be a list of integers or an object");
    const auto kind = require<std::string>(j, "kind", "delay");
    if (kind == "constant")
        return ConstantDelay{require<Round>(j, "value", "delay")};
    if (kind == "uniform")
        return UniformDelay{get_or<Round>(j, "lo", 1), require<Round>(j, "hi", "delay")};
    if (kind == "lowerbound_blocks")
        return LowerBoundBlocks{require<Round>(j, "d", "delay")};
    if (kind == "permuted")
        return PermutedDelay{require<Round>(j, "d", "delay")};
    if (kind == "list")
        return ExplicitDelays{require<std::vector<Round>>(j, "delays", "delay")};
    throw ConfigError("unknown delay kind '" + kind + "'");
}

inline EnvironmentSpec parse_environment(const json& j)
{
    if (!j.is_object())
        throw ConfigError("environment must be an object");
    const auto kind = require<std::string>(j, "kind", "environment");
    if (kind == "drift") {
        DriftEnvSpec s;
        s.step = get_or<double>(j, "step", 0.0);
        if (s.step < 0.0)
            throw ConfigError("environment.step must be nonnegative");
        const auto loss = get_or<std::string>(j, "loss", "quadratic");
        if (loss == "quadratic")
            s.loss = DriftLoss::quadratic;
        else if (loss == "linear")
            s.loss = DriftLoss::linear;
        else
            throw ConfigError("environment.loss must be 'quadratic' or 'linear'");
        return s;
    }
    if (kind == "lowerbound") {
        LowerBoundEnvSpec s;
        if (j.contains("instance_file"))
            s.instance_file = require<std::string>(j, "instance_file", "environment");
        return s;
    }
    if (kind == "linear")
        return LinearEnvSpec{require<std::vector<std::vector<double>>>(j, "gradients", "environment")};
    throw ConfigError("unknown environment kind '" + kind + "'");
}

inline ComparatorSpec parse_comparators(const json& j)
{
    if (!j.is_object())
        throw ConfigError("comparators must be an object");
    const auto kind = require<std::string>(j, "kind", "comparators");
    if (kind == "environment")
        return EnvComparators{};
    if (kind == "best_fixed")
        return BestFixedComparators{};
    if (kind == "fixed")
        return FixedComparators{require<std::vector<double>>(j, "point", "comparators")};
    if (kind == "piecewise_best") {
        const double P = require<double>(j, "P", "comparators");
        if (P < 0.0)
            throw ConfigError("comparators.P must be nonnegative");
        return PiecewiseBestComparators{P};
    }
    if (kind == "list")
        return ListComparators{require<std::vector<std::vector<double>>>(j, "points", "comparators")};
    throw ConfigError("unknown comparator kind '" + kind + "'");
}

inline SweepGrid parse_sweep(const json& j)
{
    if (!j.is_object())
        throw ConfigError("sweep must be an object");
    SweepGrid g;
    g.d = get_or<std::vector<Round>>(j, "d", {});
    g.T = get_or<std::vector<Round>>(j, "T", {});
    g.P = get_or<std::vector<double>>(j, "P", {});
    for (const auto& s : get_or<std::vector<std::string>>(j, "learner", {}))
        g.learner.push_back(learner_kind_from_string(s));
    for (const auto& [key, _] : j.items())
        if (key != "d" && key != "T" && key != "P" && key != "learner")
            throw ConfigError("unknown sweep key '" + key + "' (expected d, T, P, learner)");
    return g;
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.T = detail::get_or<Round>(j, "T", c.T);
    c.n = detail::get_or<std::size_t>(j, "n", c.n);
    c.D = detail::get_or<double>(j, "D", c.D);
    c.G = detail::get_or<double>(j, "G", c.G);
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    c.repetitions = detail::get_or<int>(j, "repetitions", c.repetitions);
    if (j.contains("learner"))
        c.learner = detail::parse_learner(j.at("learner"));
    if (j.contains("delay"))
        c.delay = detail::parse_delay(j.at("delay"));
    if (j.contains("environment"))
        c.environment = detail::parse_environment(j.at("environment"));
    if (j.contains("comparators"))
        c.comparators = detail::parse_comparators(j.at("comparators"));
    if (j.contains("sweep"))
        c.sweep = detail::parse_sweep(j.at("sweep"));
    static const char* known[] = {"T",     "n",           "D",           "G",     "seed", "repetitions",
                                  "learner", "delay", "environment", "comparators", "sweep"};
    for (const auto& [key, _] : j.items())
        if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
            throw ConfigError("unknown config field '" + key + "'");
    if (c.T < 1)
        throw ConfigError("T must be positive");
    if (c.n < 1)
        throw ConfigError("n must be positive");
    if (!(c.D > 0.0) || !(c.G > 0.0))
        throw ConfigError("D and G must be positive");
    if (c.repetitions < 1)
        throw ConfigError("repetitions must be >= 1");
    const bool doubling = c.learner.kind == LearnerKind::dogd_dt || c.learner.kind == LearnerKind::mild_dt;
    if (doubling && (c.learner.eta || c.learner.alpha || c.learner.grid))
        throw ConfigError("doubling-trick learners derive their rates online; explicit eta/alpha/grid not allowed");
    return c;
}

inline json to_json(const DelaySpec& spec)
{
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ConstantDelay>)
                return {{"kind", "constant"}, {"value", s.value}};
            else if constexpr (std::is_same_v<S, UniformDelay>)
                return {{"kind", "uniform"}, {"lo", s.lo}, {"hi", s.hi}};
            else if constexpr (std::is_same_v<S, LowerBoundBlocks>)
                return {{"kind", "lowerbound_blocks"}, {"d", s.d}};
            else if constexpr (std::is_same_v<S, PermutedDelay>)
                return {{"kind", "permuted"}, {"d", s.d}};
            else
                return {{"kind", "list"}, {"delays", s.delays}};
        },
        spec);
}

inline json to_json(const EnvironmentSpec& spec)
{
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, DriftEnvSpec>)
                return {{"kind", "drift"},
                        {"step", s.step},
                        {"loss", s.loss == DriftLoss::quadratic ? "quadratic" : "linear"}};
            else if constexpr (std::is_same_v<S, LowerBoundEnvSpec>) {
                json j = {{"kind", "lowerbound"}};
                if (s.instance_file)
                    j["instance_file"] = *s.instance_file;
                return j;
            }
            else
                return {{"kind", "linear"}, {"gradients", s.gradients}};
        },
        spec);
}

inline json to_json(const ComparatorSpec& spec)
{
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, EnvComparators>)
                return {{"kind", "environment"}};
            else if constexpr (std::is_same_v<S, BestFixedComparators>)
                return {{"kind", "best_fixed"}};
            else if constexpr (std::is_same_v<S, FixedComparators>)
                return {{"kind", "fixed"}, {"point", s.point}};
            else if constexpr (std::is_same_v<S, PiecewiseBestComparators>)
                return {{"kind", "piecewise_best"}, {"P", s.P}};
            else
                return {{"kind", "list"}, {"points", s.points}};
        },
        spec);
}

inline json to_json(const LearnerSpec& spec)
{
    json j = {{"kind", to_string(spec.kind)}};
    j["eta"] = spec.eta ? json(*spec.eta) : json("tuned");
    if (spec.kind == LearnerKind::mild) {
        j["alpha"] = spec.alpha ? json(*spec.alpha) : json("tuned");
        if (spec.grid)
            j["grid"] = *spec.grid;
    }
    return j;
}

inline json to_json(const ExperimentConfig& c)
{
    json j = {{"T", c.T},
              {"n", c.n},
              {"D", c.D},
              {"G", c.G},
              {"seed", c.seed},
              {"repetitions", c.repetitions},
              {"learner", to_json(c.learner)},
              {"delay", to_json(c.delay)},
              {"environment", to_json(c.environment)}};
    if (c.comparators)
        j["comparators"] = to_json(*c.comparators);
    return j;
}

// ---------------------------------------------------------------------------
// Lower-bound instance serialization

inline json to_json(const LowerBoundInstance& inst)
{
    return {{"T", inst.horizon()},
            {"d", inst.max_delay()},
            {"D", inst.diameter()},
            {"G", inst.gradient_bound()},
            {"n", inst.dimension()},
            {"seed", inst.seed()},
            {"signs", inst.signs()},
            {"delays", inst.schedule().delays()}};
}

inline LowerBoundInstance lowerbound_instance_from_json(const json& j)
{
    try {
        LowerBoundInstance inst(j.at("T").get<Round>(), j.at("d").get<Round>(), j.at("D").get<double>(),
                                j.at("G").get<double>(), j.at("n").get<std::size_t>(),
                                j.at("signs").get<std::vector<std::vector<int>>>(),
                                j.value("seed", std::uint64_t{0}));
        if (j.contains("delays") && j.at("delays").get<std::vector<Round>>() != inst.schedule().delays())
            throw ConfigError("lower-bound instance: stored delays do not match the block construction");
        return inst;
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("lower-bound instance: ") + e.what());
    }
    catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("lower-bound instance: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Learner construction and the round protocol

using AnyLearner = std::variant<Ogd, Dogd, DogdDoublingTrick, MildOgd, MildOgdDoublingTrick>;

struct BuiltLearner {
    AnyLearner learner;
    json resolved;
};

inline BuiltLearner make_learner(const LearnerSpec& spec, const FeasibleSet& set, double D, double G,
                                 const DelaySchedule& schedule, MildOptions options = {})
{
    const Round T = schedule.horizon();
    const auto sum_m = static_cast<double>(backlog_sum(schedule));
    json r;
    r["sum_m"] = backlog_sum(schedule);
    switch (spec.kind) {
    case LearnerKind::ogd: {
        // Non-delayed: every m_t is 1.
        const double eta = spec.eta.value_or(corollary_lr(D, G, static_cast<double>(T)));
        r["eta"] = eta;
        return {Ogd(set, eta), r};
    }
    case LearnerKind::dogd: {
        const double eta = spec.eta.value_or(corollary_lr(D, G, sum_m));
        r["eta"] = eta;
        return {Dogd(set, eta), r};
    }
    case LearnerKind::dogd_dt:
        r["eta_schedule"] = "D / (G 2^(v/2))";
        return {DogdDoublingTrick(set, D, G), r};
    case LearnerKind::mild: {
        std::vector<double> grid;
        if (spec.grid)
            grid = *spec.grid;
        else if (spec.eta) {
            grid.resize(static_cast<std::size_t>(mild_grid_size(T)));
            for (std::size_t i = 0; i < grid.size(); ++i)
                grid[i] = std::ldexp(*spec.eta, static_cast<int>(i));
        }
        else
            grid = mild_lr_grid(D, G, sum_m, T);
        const double alpha = spec.alpha.value_or(1.0 / (G * D * std::sqrt(sum_m)));
        r["alpha"] = alpha;
        r["grid"] = grid;
        return {MildOgd(set, alpha, grid, options), r};
    }
    case LearnerKind::mild_dt: {
        const auto p = mild_dt_params(D, G, T, 1);
        r["lr_constants"] = p.lr_constants;
        r["alpha_schedule"] = "1 / (G D 2^(v/2))";
        return {MildOgdDoublingTrick(set, D, G, T, options), r};
    }
    }
    throw ConfigError("unsupported learner");
}

struct RoundOutcome {
    DecisionVector played;
    double loss = 0.0;
    std::vector<Round> arrived;
};

/// One round: play, query the gradient at the played point, deliver this
/// round's arrivals (ascending), let the learner ingest them.
template <OnlineLearner L>
RoundOutcome play_round(L& learner, Round t, const LossFunction& loss, const DelaySchedule& schedule,
                        FeedbackQueue& queue)
{
    RoundOutcome out{learner.play(t), 0.0, {}};
    out.loss = loss.value(out.played);
    FeedbackItem item{t, loss.gradient(out.played), out.played};
    if constexpr (!L::uses_delayed_feedback) {
        out.arrived.push_back(t);
        const FeedbackItem items[] = {std::move(item)};
        learner.ingest(t, items);
    }
    else {
        queue.push(schedule, std::move(item));
        const auto items = queue.pop(t);
        for (const auto& i : items)
            out.arrived.push_back(i.timestamp);
        learner.ingest(t, items);
    }
    return out;
}

/// Plays the whole horizon and then the post-horizon flush (no plays, no regret).
template <OnlineLearner L>
RunTrace drive(L& learner, std::span<const LossFunction> losses, const DelaySchedule& schedule)
{
    const Round T = schedule.horizon();
    if (static_cast<Round>(losses.size()) != T)
        throw std::invalid_argument("drive: loss count does not match the schedule horizon");
    RunTrace trace;
    trace.total_delay = schedule.total_delay();
    trace.max_delay = schedule.max_delay();
    trace.in_order = is_in_order(schedule);
    const auto m = backlog(schedule);
    trace.backlog_sum = backlog_sum(schedule);
    FeedbackQueue queue;
    double cum = 0.0;
    for (Round t = 1; t <= T; ++t) {
        auto out = play_round(learner, t, losses[static_cast<std::size_t>(t - 1)], schedule, queue);
        ++trace.gradient_queries;
        cum += out.loss;
        trace.rows.push_back(
            {t, std::move(out.played), out.loss, cum, m[static_cast<std::size_t>(t - 1)], std::move(out.arrived)});
    }
    if constexpr (L::uses_delayed_feedback) {
        for (Round t = T + 1; t <= schedule.last_arrival(); ++t) {
            const auto items = queue.pop(t);
            learner.flush(t, items);
        }
        if (!queue.empty())
            throw std::logic_error("drive: feedback left pending after the flush window");
        const auto& c = learner.c_log();
        if (is_permutation_of_horizon(c, T))
            trace.c_log = c;
    }
    else {
        std::vector<Round> identity(static_cast<std::size_t>(T));
        for (Round t = 1; t <= T; ++t)
            identity[static_cast<std::size_t>(t - 1)] = t;
        trace.c_log = std::move(identity);
    }
    if constexpr (requires { learner.max_weight_sum_error(); })
        trace.max_weight_sum_error = learner.max_weight_sum_error();
    if constexpr (requires { learner.controller(); })
        trace.epoch_starts = learner.controller().epoch_starts();
    if constexpr (requires { learner.dropped(); })
        trace.dropped = learner.dropped();
    return trace;
}

inline RunTrace drive(AnyLearner& learner, std::span<const LossFunction> losses, const DelaySchedule& schedule)
{
    return std::visit([&](auto& l) { return drive(l, losses, schedule); }, learner);
}

// ---------------------------------------------------------------------------
// Environment materialization

struct Materialized {
    FeasibleSet set;
    std::vector<LossFunction> losses;
    DelaySchedule schedule;
    ComparatorSequence comparators;
    std::optional<LowerBoundInstance> instance;
};

inline DecisionVector point_from(const std::vector<double>& coords, const FeasibleSet& set, const char* what)
{
    if (coords.size() != set.dimension())
        throw ConfigError(std::string(what) + ": dimension mismatch");
    try {
        DecisionVector p(coords);
        if (!set.contains(p))
            throw ConfigError(std::string(what) + ": point outside the feasible set");
        return p;
    }
    catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

/// Environment first, then delays, from one generator seeded per run, so the
/// loss stream of a seed is the same whatever the learner or delay spec.
inline Materialized materialize(const ExperimentConfig& c, std::uint64_t seed)
{
    Rng rng(seed);
    FeasibleSet set = FeasibleSet::from_diameter(c.D, c.n);
    std::vector<LossFunction> losses;
    std::optional<ComparatorSequence> env_comparators;
    std::optional<LowerBoundInstance> instance;

    if (const auto* drift = std::get_if<DriftEnvSpec>(&c.environment)) {
        auto env = make_drift_environment(set, c.T, drift->step, drift->loss, c.G, rng);
        losses = std::move(env.losses);
        env_comparators = std::move(env.comparators);
    }
    else if (const auto* lb = std::get_if<LowerBoundEnvSpec>(&c.environment)) {
        if (lb->instance_file) {
            std::ifstream in(*lb->instance_file);
            if (!in)
                throw ConfigError("cannot open instance file '" + *lb->instance_file + "'");
            json j;
            try {
                in >> j;
            }
            catch (const json::exception& e) {
                throw ConfigError(std::string("instance file: ") + e.what());
            }
            instance = lowerbound_instance_from_json(j);
            if (instance->horizon() != c.T || instance->dimension() != c.n || instance->diameter() != c.D ||
                instance->gradient_bound() != c.G)
                throw ConfigError("instance file parameters disagree with the config (T, n, D, G)");
        }
        else {
            const auto* blocks = std::get_if<LowerBoundBlocks>(&c.delay);
            if (!blocks)
                throw ConfigError("the lowerbound environment requires delay kind 'lowerbound_blocks'");
            if (blocks->d < 1)
                throw ConfigError("lowerbound_blocks needs d >= 1");
            instance = make_lowerbound_instance(c.T, blocks->d, c.D, c.G, c.n, seed);
        }
        losses = instance->losses();
    }
    else {
        const auto& lin = std::get<LinearEnvSpec>(c.environment);
        if (static_cast<Round>(lin.gradients.size()) != c.T)
            throw ConfigError("linear environment needs exactly T gradients");
        for (std::size_t t = 0; t < lin.gradients.size(); ++t) {
            if (lin.gradients[t].size() != c.n)
                throw ConfigError("linear environment: gradient dimension mismatch");
            losses.push_back(LossFunction::linear(DecisionVector(lin.gradients[t]), static_cast<Round>(t + 1)));
        }
    }

    for (const auto& f : losses)
        if (!check_gradient_bound(f, set, c.G * (1.0 + 1e-12)))
            throw ConfigError("loss at round " + std::to_string(f.round_index()) + " violates the gradient bound G");

    std::optional<DelaySchedule> schedule;
    try {
        if (instance)
            schedule = instance->schedule();
        else
            schedule = make_schedule(c.delay, c.T, rng);
    }
    catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("delay: ") + e.what());
    }

    ComparatorSpec cspec = c.comparators.value_or(
        env_comparators ? ComparatorSpec{EnvComparators{}} : ComparatorSpec{BestFixedComparators{}});
    ComparatorSequence comparators = std::visit(
        [&](const auto& s) -> ComparatorSequence {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, EnvComparators>) {
                if (!env_comparators)
                    throw ConfigError("comparators 'environment' needs a drift environment");
                return *env_comparators;
            }
            else if constexpr (std::is_same_v<S, BestFixedComparators>) {
                const auto best = instance ? best_fixed_decision(*instance) : best_fixed_point(losses, set);
                return constant_comparators(best.point, c.T);
            }
            else if constexpr (std::is_same_v<S, FixedComparators>) {
                return constant_comparators(point_from(s.point, set, "comparators.point"), c.T);
            }
            else if constexpr (std::is_same_v<S, PiecewiseBestComparators>) {
                return best_piecewise_comparators(losses, set, block_length_for_path(c.T, c.D, s.P));
            }
            else {
                if (static_cast<Round>(s.points.size()) != c.T)
                    throw ConfigError("comparator list needs exactly T points");
                ComparatorSequence seq;
                for (const auto& p : s.points)
                    seq.points.push_back(point_from(p, set, "comparators.points"));
                return seq;
            }
        },
        cspec);

    return {std::move(set), std::move(losses), std::move(*schedule), std::move(comparators), std::move(instance)};
}

/// Order-independent digest of a loss stream, for replay checks.
inline std::uint64_t loss_digest(std::span<const LossFunction> losses)
{
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    auto feed = [&h](double x) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof x);
        std::memcpy(&bits, &x, sizeof bits);
        h = mix64(h ^ bits);
    };
    for (const auto& f : losses) {
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Linear>) {
                    for (double v : k.g) feed(v);
                }
                else if constexpr (std::is_same_v<K, QuadraticTracking>) {
                    for (double v : k.target) feed(v);
                    feed(k.scale);
                }
                else {
                    for (int v : k.signs) feed(static_cast<double>(v));
                    feed(k.gain);
                }
            },
            f.kind());
    }
    return h;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
    RunTrace trace;
    json summary;
    Materialized env;
};

struct RunOptions {
    MildOptions mild;
};

inline json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline RunResult run_once(const ExperimentConfig& c, std::uint64_t seed, const RunOptions& options = {})
{
    Materialized env = materialize(c, seed);
    BuiltLearner built = [&] {
        try {
            return make_learner(c.learner, env.set, c.D, c.G, env.schedule, options.mild);
        }
        catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("learner: ") + e.what());
        }
    }();
    RunTrace trace = drive(built.learner, env.losses, env.schedule);

    const double D = c.D;
    const double G = c.G;
    const double P = path_length(env.comparators);
    const auto S = static_cast<double>(trace.total_delay);
    const auto d = static_cast<double>(trace.max_delay);
    const auto T = static_cast<double>(c.T);
    const auto sum_m = static_cast<double>(trace.backlog_sum);

    std::optional<double> joint;
    if (trace.c_log)
        joint = joint_effect(*trace.c_log, env.comparators);

    json s;
    s["seed"] = seed;
    s["learner"] = to_string(c.learner.kind);
    s["resolved"] = built.resolved;
    s["S"] = trace.total_delay;
    s["d"] = trace.max_delay;
    s["in_order"] = trace.in_order;
    s["sum_m"] = trace.backlog_sum;
    s["P_T"] = P;
    s["cum_loss"] = trace.rows.back().cum_loss;
    s["regret_dynamic"] = dynamic_regret(trace, env.losses, env.comparators);
    s["regret_static"] = env.instance ? static_regret(trace, *env.instance) : static_regret(trace, env.losses, env.set);
    s["joint_effect"] = nullable(joint);
    s["gradient_queries"] = trace.gradient_queries;
    s["dropped"] = trace.dropped;
    s["max_weight_sum_error"] = nullable(trace.max_weight_sum_error);
    if (!trace.epoch_starts.empty())
        s["epoch_starts"] = trace.epoch_starts;
    s["loss_digest"] = loss_digest(env.losses);

    std::optional<double> thm1;
    if (c.learner.kind == LearnerKind::ogd)
        thm1 = bound_thm1(D, G, built.resolved["eta"].get<double>(), T, P, 0.0);
    else if (c.learner.kind == LearnerKind::dogd && joint)
        thm1 = bound_thm1(D, G, built.resolved["eta"].get<double>(), sum_m, P, *joint);
    s["bound_thm1"] = nullable(thm1);
    s["bound_cor1"] = bound_cor1(D, G, S, P, trace.in_order, d, T);
    s["bound_thm2"] = bound_thm2(D, G, S, P, trace.in_order, d, T);
    s["bound_dogd_dt"] = bound_dogd_dt(D, G, S, P, trace.in_order, d, T);
    s["bound_mild_dt"] = bound_mild_dt(D, G, S, P, trace.in_order, d, T);
    s["bound_lower"] = bound_lower(T, d, D, G, std::min(P, T * D));
    s["bound_lemma3"] = bound_lemma3(T, d, D, G);

    // Upper bounds that hold for this learner as configured.
    std::vector<std::string> applicable;
    const bool tuned_rates = !c.learner.eta && !c.learner.alpha && !c.learner.grid;
    switch (c.learner.kind) {
    case LearnerKind::ogd:
        applicable.push_back("bound_thm1");
        break;
    case LearnerKind::dogd:
        if (thm1)
            applicable.push_back("bound_thm1");
        if (tuned_rates)
            applicable.push_back("bound_cor1");
        break;
    case LearnerKind::mild:
        if (tuned_rates)
            applicable.push_back("bound_thm2");
        break;
    case LearnerKind::dogd_dt: applicable.push_back("bound_dogd_dt"); break;
    case LearnerKind::mild_dt: applicable.push_back("bound_mild_dt"); break;
    }
    const double regret = s["regret_dynamic"].get<double>();
    json violations = json::array();
    for (const auto& name : applicable)
        if (regret > s[name].get<double>())
            violations.push_back(name);
    s["bounds_checked"] = applicable;
    s["bound_violations"] = violations;

    return {std::move(trace), std::move(s), std::move(env)};
}

struct RunReport {
    json summary;
    std::vector<RunTrace> traces;
    bool violated = false;
};

/// Simple bounded worker pool; results land by index so ordering is deterministic.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body)
{
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::size_t failed_index = count;
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                body(i);
            }
            catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        worker();
    }
    else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);
}

/// run: `repetitions` runs with seeds seed, seed+1, ...
inline RunReport run(const ExperimentConfig& c, const RunOptions& options = {})
{
    std::vector<std::optional<RunResult>> results(static_cast<std::size_t>(c.repetitions));
    parallel_for(results.size(), [&](std::size_t i) { results[i] = run_once(c, c.seed + i, options); });
    RunReport report;
    json runs = json::array();
    for (auto& r : results) {
        report.violated = report.violated || !r->summary["bound_violations"].empty();
        runs.push_back(r->summary);
        report.traces.push_back(std::move(r->trace));
    }
    report.summary = {{"config", to_json(c)}, {"runs", runs}};
    return report;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepCell {
    std::optional<Round> d;
    std::optional<Round> T;
    std::optional<double> P;
    std::optional<LearnerKind> learner;

    auto key() const
    {
        return std::make_tuple(d.value_or(0), T.value_or(0), P.value_or(0.0),
                               learner ? static_cast<int>(*learner) : -1);
    }

    json to_json() const
    {
        json j = json::object();
        if (d) j["d"] = *d;
        if (T) j["T"] = *T;
        if (P) j["P"] = *P;
        if (learner) j["learner"] = to_string(*learner);
        return j;
    }
};

inline ExperimentConfig apply_cell(ExperimentConfig c, const SweepCell& cell)
{
    if (cell.T)
        c.T = *cell.T;
    if (cell.learner) {
        c.learner.kind = *cell.learner;
        const bool doubling = c.learner.kind == LearnerKind::dogd_dt || c.learner.kind == LearnerKind::mild_dt;
        if (doubling && (c.learner.eta || c.learner.alpha || c.learner.grid))
            throw ConfigError("doubling-trick learners cannot take explicit rates");
    }
    if (cell.d) {
        const Round d = *cell.d;
        std::visit(
            [d](auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, ConstantDelay>)
                    s.value = d;
                else if constexpr (std::is_same_v<S, UniformDelay>)
                    s.hi = d;
                else if constexpr (std::is_same_v<S, LowerBoundBlocks> || std::is_same_v<S, PermutedDelay>)
                    s.d = d;
                else
                    throw ConfigError("sweep over d needs a parametric delay spec, not an explicit list");
            },
            c.delay);
    }
    if (cell.P) {
        bool used = false;
        if (auto* drift = std::get_if<DriftEnvSpec>(&c.environment)) {
            drift->step = c.T > 1 ? *cell.P / static_cast<double>(c.T - 1) : 0.0;
            used = true;
        }
        if (c.comparators)
            if (auto* pw = std::get_if<PiecewiseBestComparators>(&*c.comparators)) {
                pw->P = *cell.P;
                used = true;
            }
        if (!used)
            throw ConfigError("sweep over P needs a drift environment or piecewise_best comparators");
    }
    return c;
}

inline std::vector<SweepCell> expand_grid(const SweepGrid& g)
{
    if (g.empty())
        throw ConfigError("sweep grid is empty");
    auto opt = []<class V>(const std::vector<V>& v) {
        std::vector<std::optional<V>> out;
        if (v.empty())
            out.push_back(std::nullopt);
        for (const auto& x : v)
            out.push_back(x);
        return out;
    };
    std::vector<SweepCell> cells;
    for (const auto& d : opt(g.d))
        for (const auto& T : opt(g.T))
            for (const auto& P : opt(g.P))
                for (const auto& l : opt(g.learner))
                    cells.push_back({d, T, P, l});
    std::sort(cells.begin(), cells.end(), [](const SweepCell& a, const SweepCell& b) { return a.key() < b.key(); });
    return cells;
}

inline double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v)
{
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

struct SweepReport {
    json rows;
    bool violated = false;
};

inline SweepReport sweep(const ExperimentConfig& base, const SweepGrid& grid, const RunOptions& options = {})
{
    const auto cells = expand_grid(grid);
    std::vector<ExperimentConfig> configs;
    for (const auto& cell : cells)
        try {
            configs.push_back(apply_cell(base, cell));
        }
        catch (const ConfigError& e) {
            throw ConfigError("sweep cell " + cell.to_json().dump() + ": " + e.what());
        }
    const auto reps = static_cast<std::size_t>(base.repetitions);
    std::vector<json> summaries(cells.size() * reps);
    try {
        parallel_for(summaries.size(), [&](std::size_t i) {
            const auto& cfg = configs[i / reps];
            try {
                summaries[i] = run_once(cfg, cfg.seed + i % reps, options).summary;
            }
            catch (const ConfigError& e) {
                throw ConfigError("sweep cell " + cells[i / reps].to_json().dump() + ": " + e.what());
            }
            catch (const std::exception& e) {
                throw std::runtime_error("sweep cell " + cells[i / reps].to_json().dump() + ": " + e.what());
            }
        });
    }
    catch (const ConfigError&) {
        throw;
    }

    SweepReport report;
    report.rows = json::array();
    static const char* averaged[] = {"S",          "sum_m",      "P_T",           "regret_dynamic", "regret_static",
                                     "bound_cor1", "bound_thm2", "bound_dogd_dt", "bound_mild_dt",  "bound_lower",
                                     "bound_lemma3"};
    for (std::size_t c = 0; c < cells.size(); ++c) {
        json row = cells[c].to_json();
        row["learner"] = to_string(configs[c].learner.kind);
        row["T"] = configs[c].T;
        row["repetitions"] = reps;
        std::size_t violations = 0;
        for (const char* field : averaged) {
            std::vector<double> values;
            for (std::size_t r = 0; r < reps; ++r)
                values.push_back(summaries[c * reps + r][field].get<double>());
            row[std::string(field) + "_mean"] = mean_of(values);
            if (std::string(field).rfind("regret", 0) == 0)
                row[std::string(field) + "_stderr"] = stderr_of(values);
        }
        for (std::size_t r = 0; r < reps; ++r)
            violations += summaries[c * reps + r]["bound_violations"].size();
        row["bound_violations"] = violations;
        row["loss_digest"] = summaries[c * reps]["loss_digest"];
        report.violated = report.violated || violations > 0;
        report.rows.push_back(row);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Lower-bound validation

struct LowerBoundReport {
    json summary;
    std::optional<bool> pass;
};

/// Runs the learner on `trials` independent sign draws of the adversarial instance.
inline LowerBoundReport lowerbound(Round T, Round d, double D, double G, std::size_t n, const LearnerSpec& learner,
                                   int trials, std::uint64_t seed)
{
    if (trials < 1)
        throw ConfigError("trials must be >= 1");
    if (T < 1 || d < 1 || n < 1 || !(D > 0.0) || !(G > 0.0))
        throw ConfigError("lowerbound: T, d, n must be >= 1 and D, G > 0");
    std::vector<double> regrets(static_cast<std::size_t>(trials));
    parallel_for(regrets.size(), [&](std::size_t i) {
        const auto inst = make_lowerbound_instance(T, d, D, G, n, seed + i);
        const auto losses = inst.losses();
        auto built = make_learner(learner, inst.set(), D, G, inst.schedule());
        const auto trace = drive(built.learner, losses, inst.schedule());
        regrets[i] = static_regret(trace, inst);
    });
    const double mean = mean_of(regrets);
    const double se = stderr_of(regrets);
    const double bound = bound_lemma3(static_cast<double>(T), static_cast<double>(d), D, G);
    LowerBoundReport r;
    r.summary = {{"T", T},
                 {"d", d},
                 {"D", D},
                 {"G", G},
                 {"n", n},
                 {"learner", to_json(learner)},
                 {"trials", trials},
                 {"seed", seed},
                 {"mean_static_regret", mean},
                 {"stderr", se},
                 {"mean_minus_2se", mean - 2.0 * se},
                 {"bound_lemma3", bound}};
    if (trials > 1) {
        r.pass = mean >= bound;
        r.summary["status"] = *r.pass ? "PASS" : "FAIL";
    }
    else {
        r.summary["status"] = nullptr;
    }
    return r;
}

} // namespace doco
