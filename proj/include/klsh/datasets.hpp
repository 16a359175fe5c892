#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"

// Readers and writers for the texmex vector formats:
//   fvecs: per record, int32 d then d float32
//   bvecs: per record, int32 d then d uint8 (mapped to [0, 1] by /255)
//   ivecs: per record, int32 count then count int32
// All little-endian. Records in one file must share d.

namespace klsh {

namespace detail {

template <class T>
[[nodiscard]] T byteswap_if_big(T value) noexcept {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        std::reverse(bytes, bytes + sizeof(T));
        std::memcpy(&value, bytes, sizeof(T));
    }
    return value;
}

template <class T>
void write_le(std::ostream& out, T value) {
    value = byteswap_if_big(value);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

/// Reads one little-endian value; returns false on clean EOF before any byte,
/// throws on a partial read.
template <class T>
[[nodiscard]] bool read_le(std::istream& in, T& value, const char* what) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    const auto got = in.gcount();
    if (got == 0) return false;
    if (got != static_cast<std::streamsize>(sizeof(T))) {
        throw ValidationError(std::string("truncated record (") + what + ")");
    }
    value = byteswap_if_big(value);
    return true;
}

template <class T>
void read_payload(std::istream& in, T& value, const char* what) {
    if (!read_le(in, value, what)) throw ValidationError(std::string("truncated record (") + what + ")");
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

template <class Element, class Convert>
Corpus read_vecs(std::istream& in, Convert convert, const char* format) {
    Corpus corpus;
    corpus.provenance = format;
    std::vector<double> row;
    std::int32_t d = 0;
    std::uint32_t next_id = 0;
    while (read_le(in, d, "dimension")) {
        if (d <= 0) throw ValidationError(std::string(format) + ": nonpositive dimension " + std::to_string(d));
        if (!corpus.empty() && static_cast<std::size_t>(d) != corpus.dim) {
            throw ValidationError(std::string(format) + ": inconsistent dimension " + std::to_string(d) +
                                  " (expected " + std::to_string(corpus.dim) + ")");
        }
        row.resize(static_cast<std::size_t>(d));
        for (auto& v : row) {
            Element e{};
            read_payload(in, e, "payload");
            v = convert(e);
        }
        corpus.push_back(row, next_id++);
    }
    return corpus;
}

inline void check_writable(const Corpus& corpus) {
    if (!corpus.empty() && corpus.dim == 0) throw ValidationError("cannot write zero-dimensional vectors");
    if (corpus.dim > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw ValidationError("dimension too large for the vecs format");
    }
}

}  // namespace detail

[[nodiscard]] inline Corpus read_fvecs(std::istream& in) {
    return detail::read_vecs<float>(in, [](float f) { return static_cast<double>(f); }, "fvecs");
}

[[nodiscard]] inline Corpus read_bvecs(std::istream& in) {
    return detail::read_vecs<std::uint8_t>(in, [](std::uint8_t b) { return static_cast<double>(b) / 255.0; },
                                           "bvecs");
}

[[nodiscard]] inline std::vector<std::vector<std::int32_t>> read_ivecs(std::istream& in) {
    std::vector<std::vector<std::int32_t>> lists;
    std::int32_t count = 0;
    while (detail::read_le(in, count, "count")) {
        if (count < 0) throw ValidationError("ivecs: negative count " + std::to_string(count));
        std::vector<std::int32_t> ids(static_cast<std::size_t>(count));
        for (auto& id : ids) detail::read_payload(in, id, "payload");
        lists.push_back(std::move(ids));
    }
    return lists;
}

inline void write_fvecs(std::ostream& out, const Corpus& corpus) {
    detail::check_writable(corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        detail::write_le(out, static_cast<std::int32_t>(corpus.dim));
        for (double v : corpus.row(i)) detail::write_le(out, static_cast<float>(v));
    }
}

/// Values are mapped back to bytes by round(v * 255), clamped to [0, 255].
inline void write_bvecs(std::ostream& out, const Corpus& corpus) {
    detail::check_writable(corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        detail::write_le(out, static_cast<std::int32_t>(corpus.dim));
        for (double v : corpus.row(i)) {
            const double scaled = std::clamp(std::round(v * 255.0), 0.0, 255.0);
            detail::write_le(out, static_cast<std::uint8_t>(scaled));
        }
    }
}

inline void write_ivecs(std::ostream& out, const std::vector<std::vector<std::int32_t>>& lists) {
    for (const auto& ids : lists) {
        detail::write_le(out, static_cast<std::int32_t>(ids.size()));
        for (std::int32_t id : ids) detail::write_le(out, id);
    }
}

[[nodiscard]] inline Corpus read_fvecs(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    Corpus c = read_fvecs(in);
    c.provenance = path.string();
    return c;
}

[[nodiscard]] inline Corpus read_bvecs(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    Corpus c = read_bvecs(in);
    c.provenance = path.string();
    return c;
}

[[nodiscard]] inline std::vector<std::vector<std::int32_t>> read_ivecs(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_ivecs(in);
}

inline void write_fvecs(const std::filesystem::path& path, const Corpus& corpus) {
    auto out = detail::open_out(path);
    write_fvecs(out, corpus);
}

inline void write_bvecs(const std::filesystem::path& path, const Corpus& corpus) {
    auto out = detail::open_out(path);
    write_bvecs(out, corpus);
}

inline void write_ivecs(const std::filesystem::path& path, const std::vector<std::vector<std::int32_t>>& lists) {
    auto out = detail::open_out(path);
    write_ivecs(out, lists);
}

/// Headerless comma-separated reals, one vector per line. Blank lines skipped.
[[nodiscard]] inline Corpus read_csv(std::istream& in) {
    Corpus corpus;
    corpus.provenance = "csv";
    std::string line;
    std::vector<double> row;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        row.clear();
        std::stringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(field, &used));
                if (field.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw ValidationError("csv line " + std::to_string(line_no) + ": not a number: '" + field + "'");
            }
        }
        if (!corpus.empty() && row.size() != corpus.dim) {
            throw ValidationError("csv line " + std::to_string(line_no) + ": inconsistent dimension");
        }
        corpus.push_back(row, static_cast<std::uint32_t>(corpus.size()));
    }
    return corpus;
}

[[nodiscard]] inline Corpus read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
    Corpus c = read_csv(in);
    c.provenance = path.string();
    return c;
}

/// Reads .fvecs, .bvecs or .csv by extension.
[[nodiscard]] inline Corpus read_corpus(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".fvecs") return read_fvecs(path);
    if (ext == ".bvecs") return read_bvecs(path);
    if (ext == ".csv") return read_csv(path);
    throw ValidationError("unsupported dataset extension '" + ext + "' (expected .fvecs, .bvecs or .csv)");
}

/// Scales every vector to unit L1 norm. Zero vectors are left as they are.
[[nodiscard]] inline Corpus normalize_l1(Corpus corpus) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        double* row = corpus.values.data() + i * corpus.dim;
        double norm = 0.0;
        for (std::size_t j = 0; j < corpus.dim; ++j) norm += std::abs(row[j]);
        if (norm > 0.0) {
            for (std::size_t j = 0; j < corpus.dim; ++j) row[j] /= norm;
        }
    }
    return corpus;
}

/// Removes all-zero vectors. Survivors keep their original ids, so the id
/// list is the map back to the source file.
[[nodiscard]] inline Corpus drop_zero(const Corpus& corpus) {
    Corpus out;
    out.dim = corpus.dim;
    out.provenance = corpus.provenance;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto row = corpus.row(i);
        if (std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; })) out.push_back(row, corpus.ids[i]);
    }
    return out;
}

/// Ids present in the original but not in the filtered corpus.
[[nodiscard]] inline std::vector<std::uint32_t> removed_ids(const Corpus& original, const Corpus& filtered) {
    std::vector<std::uint32_t> kept = filtered.ids;
    std::sort(kept.begin(), kept.end());
    std::vector<std::uint32_t> removed;
    for (std::uint32_t id : original.ids) {
        if (!std::binary_search(kept.begin(), kept.end(), id)) removed.push_back(id);
    }
    return removed;
}

struct SynthCorpus {
    Corpus corpus;
    std::vector<std::uint32_t> labels;  // generating cluster per point
    std::vector<std::vector<double>> centers;
};

/// Cluster-structured L1-normalized histograms. Cluster centers are uniform
/// on the simplex; each point is a Dirichlet draw with mean at its center and
/// total concentration `concentration` (infinite: exact copies of the center).
[[nodiscard]] inline SynthCorpus synth_histograms(std::size_t n, std::size_t d, std::size_t clusters,
                                                  double concentration, std::uint64_t seed) {
    if (n == 0 || d == 0 || clusters == 0) throw ValidationError("synth_histograms: n, d and clusters must be >= 1");
    if (!(concentration > 0.0)) throw ValidationError("synth_histograms: concentration must be positive");
    std::mt19937_64 rng(seed);

    auto simplex_draw = [&](auto&& alpha_of, std::vector<double>& out) {
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            std::gamma_distribution<double> g(alpha_of(j), 1.0);
            out[j] = g(rng);
            total += out[j];
        }
        if (!(total > 0.0)) {
            std::uniform_int_distribution<std::size_t> pick(0, d - 1);
            std::fill(out.begin(), out.end(), 0.0);
            out[pick(rng)] = 1.0;
            return;
        }
        for (double& v : out) v /= total;
    };

    SynthCorpus out;
    out.centers.assign(clusters, std::vector<double>(d));
    for (auto& c : out.centers) simplex_draw([](std::size_t) { return 1.0; }, c);

    out.corpus.dim = d;
    out.corpus.provenance = "synthetic histograms (n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                            ", clusters=" + std::to_string(clusters) + ", seed=" + std::to_string(seed) + ")";
    out.corpus.values.reserve(n * d);
    std::uniform_int_distribution<std::size_t> pick_cluster(0, clusters - 1);
    std::vector<double> point(d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = pick_cluster(rng);
        const auto& center = out.centers[label];
        if (std::isinf(concentration)) {
            point = center;
        } else {
            simplex_draw([&](std::size_t j) { return std::max(concentration * center[j], 1e-3); }, point);
        }
        out.corpus.push_back(point, static_cast<std::uint32_t>(i));
        out.labels.push_back(static_cast<std::uint32_t>(label));
    }
    return out;
}

/// Splits off the last `count` points (renumbered from 0) as a query set.
[[nodiscard]] inline std::pair<Corpus, Corpus> split_tail(const Corpus& corpus, std::size_t count) {
    if (count > corpus.size()) throw ValidationError("split_tail: not enough points");
    Corpus head, tail;
    head.dim = tail.dim = corpus.dim;
    head.provenance = corpus.provenance;
    tail.provenance = corpus.provenance + " [queries]";
    const std::size_t cut = corpus.size() - count;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (i < cut) head.push_back(corpus.row(i), corpus.ids[i]);
        else tail.push_back(corpus.row(i), static_cast<std::uint32_t>(i - cut));
    }
    return {std::move(head), std::move(tail)};
}

}  // namespace klsh
