#pragma once

// Empirical envelopes: measured maxima stored as golden values and checked
// later with a relative slack. Regeneration is always an explicit call.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "experiments.hpp"
#include "io.hpp"

namespace maxvar {

/// MAXVAR_GOLDEN_DIR if set, else the build-time default, else ./golden.
inline std::filesystem::path golden_dir()
{
    if (const char* env = std::getenv("MAXVAR_GOLDEN_DIR"); env && *env) return env;
#ifdef MAXVAR_GOLDEN_DEFAULT
    return MAXVAR_GOLDEN_DEFAULT;
#else
    return "golden";
#endif
}

inline std::filesystem::path envelope_path() { return golden_dir() / "envelopes.json"; }

struct EnvelopeCheck {
    bool found = false;
    double envelope = 0.0;
    double limit = 0.0;  // envelope (1 + slack)
    double measured = 0.0;
    bool pass = false;
};

struct Envelopes {
    double slack = 0.2;
    std::map<std::string, double> values;
    Json config = Json::object();

    EnvelopeCheck check(const std::string& name, double measured) const
    {
        EnvelopeCheck c;
        c.measured = measured;
        const auto it = values.find(name);
        if (it == values.end()) return c;
        c.found = true;
        c.envelope = it->second;
        c.limit = it->second * (1.0 + slack);
        c.pass = std::isfinite(measured) && measured <= c.limit;
        return c;
    }

    Json to_json() const
    {
        Json v = Json::object();
        for (const auto& [k, x] : values) v[k] = x;
        return {{"schema", kReportSchema}, {"kind", "envelopes"}, {"slack", slack}, {"config", config}, {"values", v}};
    }

    static Envelopes from_json(const Json& j)
    {
        try {
            if (j.at("kind").get<std::string>() != "envelopes") throw FormatError("not an envelope file");
            Envelopes e;
            e.slack = j.at("slack").get<double>();
            e.config = j.value("config", Json::object());
            for (const auto& [k, v] : j.at("values").items()) e.values[k] = v.get<double>();
            return e;
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(std::string("envelope file: ") + ex.what());
        }
    }

    static Envelopes load(const std::filesystem::path& path = envelope_path()) { return from_json(read_json(path)); }

    void save(const std::filesystem::path& path = envelope_path()) const
    {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        write_json(path, to_json());
    }
};

inline std::string envelope_key(const std::string& group, MaximalOperator::Kind kind, const std::string& what)
{
    return group + "." + (kind == MaximalOperator::Kind::Dyadic ? "dyadic" : "uncentered") + "." + what;
}

/// Corpus maxima for both operators at resolution n plus the single-cube
/// campaign maximum.
inline Envelopes compute_envelopes(Index n = 256, unsigned threads = 0, std::uint64_t seed = 42)
{
    Envelopes env;
    const auto lambdas = logspace(1e-3, 0.3, 25);
    env.config = {{"d", 2}, {"n", n}, {"lambda_grid", "log:0.001:0.3:25"}, {"seed", seed},
                  {"corpus_size", default_corpus().size()}};
    for (auto kind : {MaximalOperator::Kind::Dyadic, MaximalOperator::Kind::Uncentered}) {
        const auto s = summarize(corpus_experiment(default_corpus(), 2, n, kind, lambdas, threads, seed));
        env.values[envelope_key("corpus", kind, "max_variation_ratio")] = s.max_ratio;
        env.values[envelope_key("corpus", kind, "sup_c_dy")] = s.sup_c_dy;
        env.values[envelope_key("corpus", kind, "sup_c_un")] = s.sup_c_un;
    }
    env.values["single_cube.max_ratio"] = single_cube_campaign(seed, 50).max_ratio;
    return env;
}

} // namespace maxvar
