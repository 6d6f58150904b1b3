#pragma once

// Verification records and their JSON / CSV forms. Wall-clock quantities live
// in a separate "volatile" block so that two runs with the same configuration
// produce identical documents once that block is removed.

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace maxvar {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

struct Record {
    std::string name;
    bool pass = true;
    Json measured = Json::object();
    std::string note;
    double runtime_s = 0.0;
};

struct VerificationReport {
    std::string kind = "verification";
    std::uint64_t seed = 0;
    std::vector<Record> records;

    bool all_pass() const
    {
        for (const auto& r : records)
            if (!r.pass) return false;
        return true;
    }

    Record& add(Record r)
    {
        records.push_back(std::move(r));
        return records.back();
    }

    Json to_json(const Json& config) const
    {
        Json doc;
        doc["schema"] = kReportSchema;
        doc["kind"] = kind;
        doc["config"] = config;
        doc["seed"] = seed;
        doc["all_pass"] = all_pass();
        Json recs = Json::array();
        Json runtimes = Json::object();
        for (const auto& r : records) {
            Json j;
            j["name"] = r.name;
            j["pass"] = r.pass;
            j["measured"] = r.measured;
            if (!r.note.empty()) j["note"] = r.note;
            recs.push_back(j);
            runtimes[r.name] = r.runtime_s;
        }
        doc["records"] = recs;
        doc["volatile"] = {{"timestamp", utc_timestamp()}, {"runtime_s", runtimes}};
        return doc;
    }

    /// One row per record: name, pass, then every scalar measured field as key=value.
    std::string to_csv() const
    {
        std::ostringstream os;
        os << "name,pass,measured\n";
        for (const auto& r : records) {
            os << r.name << ',' << (r.pass ? 1 : 0) << ",\"";
            bool first = true;
            for (const auto& [k, v] : r.measured.items()) {
                if (!v.is_primitive()) continue;
                os << (first ? "" : ";") << k << '=' << v.dump();
                first = false;
            }
            os << "\"\n";
        }
        return os.str();
    }

    static std::string utc_timestamp()
    {
        const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        std::ostringstream os;
        os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        return os.str();
    }
};

/// Runs fn(record), timing it; exceptions become a failed record.
template <class Fn>
Record timed_record(const std::string& name, Fn&& fn)
{
    Record r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn(r);
    } catch (const std::exception& ex) {
        r.pass = false;
        r.note = std::string("error: ") + ex.what();
    }
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace maxvar
