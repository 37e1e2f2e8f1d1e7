#pragma once

// Mixed-type sample matrix: N rows by D columns plus a per-column schema
// saying whether each variable is continuous or binary.  Binary values are
// stored as 0.0/1.0 so downstream linear algebra is uniform.

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcl {

enum class VariableKind { kContinuous, kBinary };

inline std::string to_string(VariableKind kind) {
    return kind == VariableKind::kContinuous ? "continuous" : "binary";
}

inline VariableKind variable_kind_from_string(const std::string& s) {
    if (s == "continuous") return VariableKind::kContinuous;
    if (s == "binary") return VariableKind::kBinary;
    throw std::invalid_argument("unknown variable kind: " + s);
}

struct VariableSchema {
    std::vector<VariableKind> kinds;

    int num_vars() const { return static_cast<int>(kinds.size()); }

    bool is_binary(int j) const {
        return kinds[static_cast<std::size_t>(j)] == VariableKind::kBinary;
    }

    static VariableSchema all_continuous(int d) {
        return VariableSchema{std::vector<VariableKind>(static_cast<std::size_t>(d),
                                                        VariableKind::kContinuous)};
    }
};

struct MixedDataset {
    Eigen::MatrixXd values;                 // N x D
    VariableSchema schema;
    std::vector<std::string> names;         // optional; sized D when present
    std::optional<std::vector<int>> labels; // ground-truth class ids, sized N

    int num_samples() const { return static_cast<int>(values.rows()); }
    int num_vars() const { return static_cast<int>(values.cols()); }

    MixedDataset rows(const std::vector<int>& idx) const {
        MixedDataset out;
        out.schema = schema;
        out.names = names;
        out.values.resize(static_cast<Eigen::Index>(idx.size()), values.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            out.values.row(static_cast<Eigen::Index>(r)) = values.row(idx[r]);
        }
        if (labels) {
            std::vector<int> sub;
            sub.reserve(idx.size());
            for (int i : idx) sub.push_back((*labels)[static_cast<std::size_t>(i)]);
            out.labels = std::move(sub);
        }
        return out;
    }
};

inline void validate_dataset(const MixedDataset& data) {
    if (data.num_samples() < 1) {
        throw std::invalid_argument("dataset must contain at least one sample");
    }
    if (data.schema.num_vars() != data.num_vars()) {
        throw std::invalid_argument("schema length " + std::to_string(data.schema.num_vars()) +
                                    " does not match column count " +
                                    std::to_string(data.num_vars()));
    }
    for (int j = 0; j < data.num_vars(); ++j) {
        if (!data.schema.is_binary(j)) continue;
        for (int n = 0; n < data.num_samples(); ++n) {
            const double v = data.values(n, j);
            if (v != 0.0 && v != 1.0) {
                throw std::invalid_argument("binary column " + std::to_string(j) +
                                            " contains non 0/1 value at row " +
                                            std::to_string(n));
            }
        }
    }
    if (data.labels && static_cast<int>(data.labels->size()) != data.num_samples()) {
        throw std::invalid_argument("label vector length does not match sample count");
    }
}

}  // namespace hcl
