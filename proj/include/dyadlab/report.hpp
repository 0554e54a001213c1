#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyadlab/constants.hpp"
#include "dyadlab/verify.hpp"

namespace dyadlab {

// Report schema (stable keys):
//   constants json: [{name, value, lower_bound, witness, seed, params}, ...]
//   checks csv: name,lhs,rhs,ratio,fitted_constant,ceiling,pass,vacuous,witness
// Doubles print as %.17g so reruns are byte-identical.

using Json = nlohmann::ordered_json;

inline std::string num17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline Json constant_to_json(const ConstantReport& rep, std::uint64_t seed,
                             const std::string& params = "") {
    Json j;
    j["name"] = rep.name;
    j["value"] = num17(rep.value);
    j["lower_bound"] = rep.lower_bound_flag;
    j["witness"] = rep.witness.token;
    j["seed"] = seed;
    j["params"] = params.empty() ? rep.provenance : params;
    return j;
}

inline Json check_to_json(const CheckRecord& rec) {
    Json j;
    j["name"] = rec.name;
    j["lhs"] = num17(rec.lhs);
    j["rhs"] = num17(rec.rhs);
    j["ratio"] = num17(rec.ratio);
    j["fitted_constant"] = num17(rec.fitted_constant);
    j["ceiling"] = num17(rec.ceiling);
    j["pass"] = rec.pass;
    j["vacuous"] = rec.vacuous;
    j["witness"] = rec.witness;
    return j;
}

inline std::string checks_to_csv(const std::vector<CheckRecord>& recs) {
    std::string out = "name,lhs,rhs,ratio,fitted_constant,ceiling,pass,vacuous,witness\n";
    for (const auto& r : recs) {
        std::string name = r.name;
        for (auto& ch : name)
            if (ch == ',') ch = ';';
        out += name + "," + num17(r.lhs) + "," + num17(r.rhs) + "," + num17(r.ratio) + "," +
               num17(r.fitted_constant) + "," + num17(r.ceiling) + "," +
               (r.pass ? "1" : "0") + "," + (r.vacuous ? "1" : "0") + "," + r.witness + "\n";
    }
    return out;
}

inline std::string constants_to_csv(const std::vector<Json>& reps) {
    std::string out = "name,value,lower_bound,witness,seed,params\n";
    for (const auto& j : reps) {
        out += j["name"].get<std::string>() + "," + j["value"].get<std::string>() + "," +
               (j["lower_bound"].get<bool>() ? "1" : "0") + "," +
               j["witness"].get<std::string>() + "," + std::to_string(j["seed"].get<std::uint64_t>()) +
               "," + j["params"].get<std::string>() + "\n";
    }
    return out;
}

// write-temp-then-rename so partial files never surface
inline void write_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc | std::ios::binary);
        require(f.good(), "bad-args", "cannot write " + tmp);
        f << contents;
    }
    std::rename(tmp.c_str(), path.c_str());
}

inline Json merge_reports(const std::vector<std::string>& paths) {
    Json merged = Json::array();
    for (const auto& p : paths) {
        std::ifstream f(p);
        require(f.good(), "bad-args", "cannot open report " + p);
        Json j = Json::parse(f);
        if (j.is_array())
            for (auto& item : j) merged.push_back(item);
        else
            merged.push_back(j);
    }
    return merged;
}

} // namespace dyadlab
