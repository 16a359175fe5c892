#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "klsh/bounds.hpp"
#include "klsh/retrieval.hpp"
#include "klsh/spectral.hpp"

// CSV and JSON writers for evaluation and diagnostic reports. Every file
// starts with the configuration that produced it; nothing time-dependent is
// written, so identical runs give identical bytes.

namespace klsh {

using Echo = std::vector<std::pair<std::string, std::string>>;

[[nodiscard]] inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_echo_comments(std::ostream& out, const Echo& echo) {
    for (const auto& [key, value] : echo) out << "# " << key << '=' << value << '\n';
}

[[nodiscard]] inline nlohmann::ordered_json echo_json(const Echo& echo) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, value] : echo) j[key] = value;
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const RunParams& p) {
    return {{"kernel", p.kernel}, {"normalize", p.normalize}, {"scale", p.scale}, {"m", p.m},
            {"t", p.t},           {"bits", p.bits},           {"rank", p.rank},   {"rank_label", p.rank_label},
            {"variant", p.variant}, {"seed", p.seed}};
}

/// One row per (report, R): R, recall, then the swept parameters.
inline void write_recall_csv(std::ostream& out, const std::vector<EvalReport>& reports, const Echo& echo) {
    write_echo_comments(out, echo);
    out << "R,recall,kernel,normalize,scale,m,t,bits,rank,rank_label,variant,seed\n";
    for (const EvalReport& r : reports) {
        const RunParams& p = r.params;
        for (const auto& [R, recall] : r.recall_at) {
            out << R << ',' << format_real(recall) << ',' << p.kernel << ',' << (p.normalize ? 1 : 0) << ','
                << format_real(p.scale) << ',' << p.m << ',' << p.t << ',' << p.bits << ',' << p.rank << ','
                << p.rank_label << ',' << p.variant << ',' << p.seed << '\n';
        }
    }
}

inline void write_recall_json(std::ostream& out, const std::vector<EvalReport>& reports, const Echo& echo) {
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const EvalReport& r : reports) {
        nlohmann::ordered_json recall = nlohmann::ordered_json::object();
        for (const auto& [R, value] : r.recall_at) recall[std::to_string(R)] = value;
        runs.push_back({{"params", to_json(r.params)},
                        {"queries", r.queries},
                        {"tied_queries", r.tied_queries},
                        {"recall_at", recall}});
    }
    nlohmann::ordered_json doc = {{"config", echo_json(echo)}, {"runs", runs}};
    out << doc.dump(2) << '\n';
}

struct DecaySeries {
    double scale = 1.0;
    std::size_t numeric_rank = 0;
    std::vector<DecayRow> rows;
};

inline void write_decay_csv(std::ostream& out, const std::vector<DecaySeries>& series, const Echo& echo) {
    write_echo_comments(out, echo);
    out << "scale,k,lambda,delta,tail_mass,zero_eigengap\n";
    for (const DecaySeries& s : series) {
        for (const DecayRow& r : s.rows) {
            out << format_real(s.scale) << ',' << r.k << ',' << format_real(r.lambda) << ','
                << format_real(r.delta) << ',' << format_real(r.tail_mass) << ',' << (r.zero_eigengap ? 1 : 0)
                << '\n';
        }
    }
}

struct BoundSeries {
    double scale = 1.0;
    std::vector<BoundRow> bounds;
    std::vector<EliminationReport> elimination;
    std::vector<std::string> notes;  // flagged conditions (zero eigengap, ...)
};

inline void write_bounds_csv(std::ostream& out, const std::vector<BoundSeries>& series, const Echo& echo) {
    write_echo_comments(out, echo);
    out << "# spectral inputs: " << kPlugInLabel << '\n';
    out << "scale,k,xi,eps,lambda,delta,eta,threshold,bound,applicable,success_probability,status\n";
    for (const BoundSeries& s : series) {
        for (const BoundRow& r : s.bounds) {
            out << format_real(s.scale) << ',' << r.k << ',' << format_real(r.xi) << ',' << format_real(r.eps)
                << ',' << format_real(r.lambda_k) << ',' << format_real(r.delta_k) << ',';
            if (r.zero_eigengap) {
                out << ",,,0,,zero eigengap\n";
                continue;
            }
            const BoundResult& b = r.bound;
            out << format_real(b.eta) << ',' << format_real(b.threshold) << ',' << format_real(b.value) << ','
                << (b.applicable ? 1 : 0) << ',' << format_real(b.success_probability) << ','
                << (b.applicable ? kPlugInLabel : "bound inapplicable") << '\n';
        }
    }
}

inline void write_elimination_csv(std::ostream& out, const std::vector<BoundSeries>& series, const Echo& echo) {
    write_echo_comments(out, echo);
    out << "scale,k,lambda,delta,eta,threshold,violation_rate,status\n";
    for (const BoundSeries& s : series) {
        for (const EliminationReport& e : s.elimination) {
            out << format_real(s.scale) << ',' << e.k << ',' << format_real(e.lambda_k) << ','
                << format_real(e.delta_k) << ',' << format_real(e.eta) << ',' << format_real(e.threshold) << ','
                << format_real(e.violation_rate) << ',' << (e.vacuous ? "vacuous threshold" : e.label) << '\n';
        }
    }
}

inline void write_diagnose_json(std::ostream& out, const std::vector<DecaySeries>& decay,
                                const std::vector<BoundSeries>& bounds, const Echo& echo) {
    nlohmann::ordered_json doc;
    doc["config"] = echo_json(echo);
    doc["label"] = kPlugInLabel;
    doc["lsh_guarantee"] = {{"success_probability", "> 0.5"},
                            {"space", "O(dn + n^(1+1/(1+eps)))"},
                            {"query", "O(n^(1/(1+eps)))"}};
    nlohmann::ordered_json series = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < decay.size(); ++i) {
        nlohmann::ordered_json s;
        s["scale"] = decay[i].scale;
        s["numeric_rank"] = decay[i].numeric_rank;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const DecayRow& r : decay[i].rows) {
            rows.push_back({{"k", r.k}, {"lambda", r.lambda}, {"delta", r.delta},
                            {"tail_mass", r.tail_mass}, {"zero_eigengap", r.zero_eigengap}});
        }
        s["decay"] = rows;
        if (i < bounds.size()) {
            nlohmann::ordered_json b = nlohmann::ordered_json::array();
            for (const BoundRow& r : bounds[i].bounds) {
                nlohmann::ordered_json row = {{"k", r.k}, {"xi", r.xi}, {"eps", r.eps}};
                if (r.zero_eigengap) {
                    row["status"] = "zero eigengap";
                } else {
                    row["eta"] = r.bound.eta;
                    row["threshold"] = r.bound.threshold;
                    row["bound"] = r.bound.value;
                    row["applicable"] = r.bound.applicable;
                    row["success_probability"] = r.bound.success_probability;
                }
                b.push_back(row);
            }
            s["bounds"] = b;
            nlohmann::ordered_json e = nlohmann::ordered_json::array();
            for (const EliminationReport& r : bounds[i].elimination) {
                e.push_back({{"k", r.k}, {"threshold", r.threshold}, {"eta", r.eta},
                             {"violation_rate", r.violation_rate}, {"vacuous", r.vacuous}});
            }
            s["elimination"] = e;
            s["notes"] = bounds[i].notes;
        }
        series.push_back(s);
    }
    doc["series"] = series;
    out << doc.dump(2) << '\n';
}

}  // namespace klsh
