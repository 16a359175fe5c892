#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klsh/datasets.hpp"
#include "klsh/error.hpp"
#include "klsh/hashing.hpp"
#include "klsh/retrieval.hpp"
#include "klsh/spectral.hpp"

// Binary snapshot of a projection model with an optional hash bank, and the
// packed code-set file. All integers and doubles are little-endian, so a
// round trip reproduces every stored double bit for bit.
//
// Model snapshot (version 1):
//   "KLSHMODL" u32 version
//   u8 kernel  u8 normalize  f64 scale  u8 embedding  u8 center_queries
//   u64 rank  u64 m  u64 d
//   u32[m] anchor ids  f64[m*d] anchors  f64[m] anchor self-similarities
//   f64[m] gram row means  f64 gram mean
//   f64[m] eigenvalues  f64[m*m] eigenvectors (column-major)
//   u8 has_bank
//   bank: "KLSHBANK" u8 variant u64 bits u64 t u64 seed u64 rows u64 cols
//         f64[rows*cols] weights (row-major), then for clt per bit:
//         u64 count, u32[count] anchor positions
//
// Code set (version 1):
//   "KLSHCODE" u32 version u64 n u32 bits, then n codes of ceil(bits/8)
//   bytes; bit i of a code is bit i % 8 of byte i / 8. Ids are the record
//   positions 0..n-1.

namespace klsh {

inline constexpr std::array<char, 8> kModelMagic{'K', 'L', 'S', 'H', 'M', 'O', 'D', 'L'};
inline constexpr std::array<char, 8> kBankMagic{'K', 'L', 'S', 'H', 'B', 'A', 'N', 'K'};
inline constexpr std::array<char, 8> kCodeMagic{'K', 'L', 'S', 'H', 'C', 'O', 'D', 'E'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::uint32_t kCodeSetVersion = 1;

struct Snapshot {
    ProjectionModel model;
    std::optional<HashBank> bank;
};

namespace detail {

inline void write_magic(std::ostream& out, const std::array<char, 8>& magic) { out.write(magic.data(), 8); }

inline void expect_magic(std::istream& in, const std::array<char, 8>& magic, const char* what) {
    std::array<char, 8> got{};
    in.read(got.data(), 8);
    if (in.gcount() != 8 || got != magic) throw ValidationError(std::string("not a ") + what + " file (bad magic)");
}

template <class T>
[[nodiscard]] T read_value(std::istream& in) {
    T v{};
    read_payload(in, v, "snapshot");
    return v;
}

inline void write_doubles(std::ostream& out, const double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) write_le(out, data[i]);
}

inline void read_doubles(std::istream& in, double* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) read_payload(in, data[i], "snapshot");
}

[[nodiscard]] inline std::size_t checked_size(std::uint64_t v, std::uint64_t limit, const char* what) {
    if (v > limit) throw ValidationError(std::string("snapshot field out of range: ") + what);
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline void write_snapshot(std::ostream& out, const ProjectionModel& model, const HashBank* bank = nullptr) {
    using detail::write_le;
    detail::write_magic(out, kModelMagic);
    write_le(out, kSnapshotVersion);
    write_le(out, static_cast<std::uint8_t>(model.kernel.base));
    write_le(out, static_cast<std::uint8_t>(model.kernel.normalize));
    write_le(out, model.kernel.scale);
    write_le(out, static_cast<std::uint8_t>(model.variant));
    write_le(out, static_cast<std::uint8_t>(model.center_queries));
    write_le(out, static_cast<std::uint64_t>(model.rank));
    const std::size_t m = model.m();
    write_le(out, static_cast<std::uint64_t>(m));
    write_le(out, static_cast<std::uint64_t>(model.anchors.dim));
    for (std::uint32_t id : model.anchors.ids) write_le(out, id);
    detail::write_doubles(out, model.anchors.values.data(), model.anchors.values.size());
    detail::write_doubles(out, model.anchor_self.data(), m);
    detail::write_doubles(out, model.gram_row_means.data(), m);
    write_le(out, model.gram_mean);
    detail::write_doubles(out, model.spectrum.values.data(), m);
    detail::write_doubles(out, model.spectrum.vectors.data(), m * m);

    write_le(out, static_cast<std::uint8_t>(bank != nullptr));
    if (bank == nullptr) return;
    detail::write_magic(out, kBankMagic);
    write_le(out, static_cast<std::uint8_t>(bank->variant));
    write_le(out, static_cast<std::uint64_t>(bank->bits));
    write_le(out, static_cast<std::uint64_t>(bank->t));
    write_le(out, bank->seed);
    write_le(out, static_cast<std::uint64_t>(bank->weights.rows()));
    write_le(out, static_cast<std::uint64_t>(bank->weights.cols()));
    for (Eigen::Index r = 0; r < bank->weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < bank->weights.cols(); ++c) write_le(out, bank->weights(r, c));
    }
    if (bank->variant == HashVariant::clt) {
        for (const auto& subset : bank->subsets) {
            write_le(out, static_cast<std::uint64_t>(subset.size()));
            for (std::uint32_t j : subset) write_le(out, j);
        }
    }
}

[[nodiscard]] inline Snapshot read_snapshot(std::istream& in) {
    using detail::read_value;
    detail::expect_magic(in, kModelMagic, "model snapshot");
    const auto version = read_value<std::uint32_t>(in);
    if (version != kSnapshotVersion) {
        throw ValidationError("unsupported snapshot version " + std::to_string(version));
    }
    Snapshot snap;
    ProjectionModel& model = snap.model;
    const auto base = read_value<std::uint8_t>(in);
    if (base > 2) throw ValidationError("snapshot: unknown kernel");
    model.kernel.base = static_cast<BaseKernel>(base);
    model.kernel.normalize = read_value<std::uint8_t>(in) != 0;
    model.kernel.scale = read_value<double>(in);
    model.kernel.validate();
    const auto variant = read_value<std::uint8_t>(in);
    if (variant > 1) throw ValidationError("snapshot: unknown embedding variant");
    model.variant = static_cast<EmbeddingVariant>(variant);
    model.center_queries = read_value<std::uint8_t>(in) != 0;
    const auto rank = read_value<std::uint64_t>(in);
    const std::size_t m = detail::checked_size(read_value<std::uint64_t>(in), 1u << 20, "m");
    const std::size_t d = detail::checked_size(read_value<std::uint64_t>(in), 1u << 26, "d");
    if (m == 0) throw ValidationError("snapshot: empty anchor set");

    model.anchors.dim = d;
    model.anchors.ids.resize(m);
    for (auto& id : model.anchors.ids) id = read_value<std::uint32_t>(in);
    model.anchors.values.resize(m * d);
    detail::read_doubles(in, model.anchors.values.data(), m * d);
    model.anchors.provenance = "snapshot";
    const auto mi = static_cast<Eigen::Index>(m);
    model.anchor_self.resize(mi);
    detail::read_doubles(in, model.anchor_self.data(), m);
    model.gram_row_means.resize(mi);
    detail::read_doubles(in, model.gram_row_means.data(), m);
    model.gram_mean = read_value<double>(in);
    model.spectrum.values.resize(mi);
    detail::read_doubles(in, model.spectrum.values.data(), m);
    model.spectrum.vectors.resize(mi, mi);
    detail::read_doubles(in, model.spectrum.vectors.data(), m * m);
    if (rank == 0 || rank > model.numeric_rank()) throw ValidationError("snapshot: rank outside numeric rank");
    model.rank = static_cast<std::size_t>(rank);

    if (read_value<std::uint8_t>(in) == 0) return snap;
    detail::expect_magic(in, kBankMagic, "hash bank");
    HashBank bank;
    const auto bank_variant = read_value<std::uint8_t>(in);
    if (bank_variant > 1) throw ValidationError("snapshot: unknown hash variant");
    bank.variant = static_cast<HashVariant>(bank_variant);
    bank.bits = detail::checked_size(read_value<std::uint64_t>(in), 1u << 24, "bits");
    bank.t = detail::checked_size(read_value<std::uint64_t>(in), m, "t");
    bank.seed = read_value<std::uint64_t>(in);
    const std::size_t rows = detail::checked_size(read_value<std::uint64_t>(in), 1u << 24, "rows");
    const std::size_t cols = detail::checked_size(read_value<std::uint64_t>(in), m, "cols");
    const std::size_t expected_cols = bank.variant == HashVariant::clt ? m : model.rank;
    if (rows != bank.bits || cols != expected_cols) throw ValidationError("snapshot: bank shape mismatch");
    bank.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < bank.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < bank.weights.cols(); ++c) bank.weights(r, c) = read_value<double>(in);
    }
    if (bank.variant == HashVariant::clt) {
        bank.subsets.resize(bank.bits);
        for (auto& subset : bank.subsets) {
            subset.resize(detail::checked_size(read_value<std::uint64_t>(in), m, "subset size"));
            for (auto& j : subset) {
                j = read_value<std::uint32_t>(in);
                if (j >= m) throw ValidationError("snapshot: subset index out of range");
            }
        }
    }
    bank.model = model;
    snap.bank = std::move(bank);
    return snap;
}

inline void write_snapshot(const std::filesystem::path& path, const ProjectionModel& model,
                           const HashBank* bank = nullptr) {
    auto out = detail::open_out(path);
    write_snapshot(out, model, bank);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

[[nodiscard]] inline Snapshot read_snapshot(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_snapshot(in);
}

inline void write_codeset(std::ostream& out, const CodeSet& codes) {
    using detail::write_le;
    detail::write_magic(out, kCodeMagic);
    write_le(out, kCodeSetVersion);
    write_le(out, static_cast<std::uint64_t>(codes.size()));
    write_le(out, static_cast<std::uint32_t>(codes.bits()));
    const std::size_t nbytes = (codes.bits() + 7) / 8;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto words = codes.words(i);
        for (std::size_t b = 0; b < nbytes; ++b) {
            out.put(static_cast<char>((words[b / 8] >> (8 * (b % 8))) & 0xFFU));
        }
    }
}

[[nodiscard]] inline CodeSet read_codeset(std::istream& in) {
    using detail::read_value;
    detail::expect_magic(in, kCodeMagic, "code set");
    const auto version = read_value<std::uint32_t>(in);
    if (version != kCodeSetVersion) throw ValidationError("unsupported code set version " + std::to_string(version));
    const auto n = read_value<std::uint64_t>(in);
    const auto bits = read_value<std::uint32_t>(in);
    if (bits == 0) throw ValidationError("code set: zero-length codes");
    CodeSet codes(bits);
    const std::size_t nbytes = (bits + 7) / 8;
    std::vector<unsigned char> bytes(nbytes);
    for (std::uint64_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(nbytes));
        if (in.gcount() != static_cast<std::streamsize>(nbytes)) throw ValidationError("code set: truncated code");
        HashCode code(bits);
        for (std::size_t b = 0; b < nbytes; ++b) code.words[b / 8] |= std::uint64_t{bytes[b]} << (8 * (b % 8));
        if (bits % 64 != 0 && (code.words.back() >> (bits % 64)) != 0) {
            throw ValidationError("code set: nonzero padding bits");
        }
        codes.push_back(code, static_cast<std::uint32_t>(i));
    }
    return codes;
}

inline void write_codeset(const std::filesystem::path& path, const CodeSet& codes) {
    auto out = detail::open_out(path);
    write_codeset(out, codes);
}

[[nodiscard]] inline CodeSet read_codeset(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    return read_codeset(in);
}

}  // namespace klsh
