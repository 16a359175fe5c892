#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "klsh/error.hpp"

namespace klsh {

/// A dense set of d-dimensional points stored row-major, each tagged with the
/// identifier it had in the source file (identifiers survive filtering).
struct Corpus {
    std::size_t dim = 0;
    std::vector<double> values;
    std::vector<std::uint32_t> ids;
    std::string provenance;

    [[nodiscard]] std::size_t size() const noexcept { return ids.size(); }
    [[nodiscard]] bool empty() const noexcept { return ids.empty(); }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {values.data() + i * dim, dim};
    }

    void push_back(std::span<const double> point, std::uint32_t id) {
        if (empty() && dim == 0) dim = point.size();
        if (point.size() != dim) {
            throw ValidationError("point dimension " + std::to_string(point.size()) +
                                  " does not match corpus dimension " + std::to_string(dim));
        }
        values.insert(values.end(), point.begin(), point.end());
        ids.push_back(id);
    }

    /// Rows at the given positions, keeping their identifiers.
    [[nodiscard]] Corpus subset(std::span<const std::size_t> positions) const {
        Corpus out;
        out.dim = dim;
        out.provenance = provenance;
        out.values.reserve(positions.size() * dim);
        out.ids.reserve(positions.size());
        for (std::size_t p : positions) {
            if (p >= size()) throw ValidationError("subset position out of range");
            out.push_back(row(p), ids[p]);
        }
        return out;
    }

    /// Builds a corpus with identifiers 0..n-1.
    [[nodiscard]] static Corpus from_rows(const std::vector<std::vector<double>>& rows,
                                          std::string provenance = {}) {
        Corpus out;
        out.provenance = std::move(provenance);
        if (!rows.empty()) out.dim = rows.front().size();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.push_back(rows[i], static_cast<std::uint32_t>(i));
        }
        return out;
    }
};

}  // namespace klsh
