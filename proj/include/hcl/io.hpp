#pragma once

// File formats: CSV data with a JSON schema sidecar, JSON graphs, and the
// result/trace JSON emitted by the engine.  Writers are atomic (temp file +
// rename) and doubles round-trip exactly through 17 significant digits.

#include "hcl/dag.hpp"
#include "hcl/dataset.hpp"
#include "hcl/engine.hpp"
#include "hcl/vbgmm.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcl {

using Json = nlohmann::json;

class DataFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Graph JSON: {"num_vars": D, "edges": [{"from": i, "to": j, "weight": w}]}

inline Json graph_to_json(const WeightedDag& dag) {
    Json edges = Json::array();
    for (const Edge& e : dag.edges()) {
        edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    }
    return Json{{"num_vars", dag.num_vars()}, {"edges", std::move(edges)}};
}

inline WeightedDag graph_from_json(const Json& j) {
    if (!j.contains("num_vars") || !j.contains("edges")) {
        throw DataFormatError("graph JSON requires num_vars and edges");
    }
    WeightedDag dag(j.at("num_vars").get<int>());
    for (const Json& e : j.at("edges")) {
        const int from = e.at("from").get<int>();
        const int to = e.at("to").get<int>();
        if (from < 0 || from >= dag.num_vars() || to < 0 || to >= dag.num_vars()) {
            throw DataFormatError("graph JSON edge endpoint out of range");
        }
        dag.weights(from, to) = e.at("weight").get<double>();
    }
    return dag;
}

inline Json graph_list_to_json(const std::vector<WeightedDag>& graphs) {
    Json list = Json::array();
    for (const WeightedDag& g : graphs) list.push_back(graph_to_json(g));
    return Json{{"graphs", std::move(list)}};
}

inline std::vector<WeightedDag> graph_list_from_json(const Json& j) {
    std::vector<WeightedDag> out;
    for (const Json& g : j.at("graphs")) out.push_back(graph_from_json(g));
    return out;
}

// ---------------------------------------------------------------------------
// Schema JSON:
// {"variables": [{"name": ..., "kind": "continuous"|"binary"}],
//  "labels_column": optional}

inline Json schema_to_json(const VariableSchema& schema, const std::vector<std::string>& names,
                           const std::optional<std::string>& labels_column = std::nullopt) {
    Json variables = Json::array();
    for (int j = 0; j < schema.num_vars(); ++j) {
        const std::string name = j < static_cast<int>(names.size())
                                     ? names[static_cast<std::size_t>(j)]
                                     : "X" + std::to_string(j + 1);
        variables.push_back({{"name", name},
                             {"kind", to_string(schema.kinds[static_cast<std::size_t>(j)])}});
    }
    Json out{{"variables", std::move(variables)}};
    if (labels_column) out["labels_column"] = *labels_column;
    return out;
}

struct SchemaFile {
    VariableSchema schema;
    std::vector<std::string> names;
    std::optional<std::string> labels_column;
};

inline SchemaFile schema_from_json(const Json& j) {
    SchemaFile out;
    if (!j.contains("variables")) throw DataFormatError("schema JSON requires variables");
    for (const Json& v : j.at("variables")) {
        out.names.push_back(v.at("name").get<std::string>());
        out.schema.kinds.push_back(variable_kind_from_string(v.at("kind").get<std::string>()));
    }
    if (j.contains("labels_column") && !j.at("labels_column").is_null()) {
        out.labels_column = j.at("labels_column").get<std::string>();
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

inline std::string dataset_to_csv(const MixedDataset& data,
                                  const std::optional<std::string>& labels_column = std::nullopt) {
    std::ostringstream os;
    for (int j = 0; j < data.num_vars(); ++j) {
        if (j > 0) os << ",";
        os << (j < static_cast<int>(data.names.size()) ? data.names[static_cast<std::size_t>(j)]
                                                       : "X" + std::to_string(j + 1));
    }
    const bool with_labels = labels_column && data.labels;
    if (with_labels) os << "," << *labels_column;
    os << "\n";

    for (int n = 0; n < data.num_samples(); ++n) {
        for (int j = 0; j < data.num_vars(); ++j) {
            if (j > 0) os << ",";
            os << detail::format_double(data.values(n, j));
        }
        if (with_labels) os << "," << (*data.labels)[static_cast<std::size_t>(n)];
        os << "\n";
    }
    return os.str();
}

// Parses a CSV against its schema sidecar.  Column order comes from the CSV
// header; every schema variable must be present, and the labels column (when
// named) is extracted rather than treated as data.
inline MixedDataset dataset_from_csv(const std::string& csv_text, const SchemaFile& schema_file) {
    std::istringstream is(csv_text);
    std::string line;
    if (!std::getline(is, line)) throw DataFormatError("CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_line(line);

    const int d = schema_file.schema.num_vars();
    std::vector<int> var_col(static_cast<std::size_t>(d), -1);
    int labels_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (schema_file.labels_column && header[c] == *schema_file.labels_column) {
            labels_col = static_cast<int>(c);
            continue;
        }
        for (int j = 0; j < d; ++j) {
            if (header[c] == schema_file.names[static_cast<std::size_t>(j)]) {
                var_col[static_cast<std::size_t>(j)] = static_cast<int>(c);
            }
        }
    }
    for (int j = 0; j < d; ++j) {
        if (var_col[static_cast<std::size_t>(j)] < 0) {
            throw DataFormatError("CSV is missing schema column '" +
                                  schema_file.names[static_cast<std::size_t>(j)] + "'");
        }
    }
    if (schema_file.labels_column && labels_col < 0) {
        throw DataFormatError("CSV is missing labels column '" + *schema_file.labels_column + "'");
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataFormatError("CSV row " + std::to_string(rows.size() + 2) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
        }
        std::vector<double> row(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            const std::string& field = fields[static_cast<std::size_t>(var_col[static_cast<std::size_t>(j)])];
            try {
                row[static_cast<std::size_t>(j)] = std::stod(field);
            } catch (const std::exception&) {
                throw DataFormatError("CSV value '" + field + "' in column '" +
                                      schema_file.names[static_cast<std::size_t>(j)] +
                                      "' is not numeric");
            }
        }
        rows.push_back(std::move(row));
        if (labels_col >= 0) {
            labels.push_back(std::stoi(fields[static_cast<std::size_t>(labels_col)]));
        }
    }
    if (rows.empty()) throw DataFormatError("CSV has a header but no data rows");

    MixedDataset data;
    data.schema = schema_file.schema;
    data.names = schema_file.names;
    data.values.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int j = 0; j < d; ++j) {
            data.values(static_cast<Eigen::Index>(r), j) = rows[r][static_cast<std::size_t>(j)];
        }
    }
    if (labels_col >= 0) data.labels = std::move(labels);
    try {
        validate_dataset(data);
    } catch (const std::invalid_argument& err) {
        throw DataFormatError(err.what());
    }
    return data;
}

// ---------------------------------------------------------------------------
// Result JSON

inline Json trace_to_json(const std::vector<IterationRecord>& trace) {
    Json out = Json::array();
    for (const IterationRecord& rec : trace) {
        Json clusters = Json::array();
        for (const ClusterSummary& c : rec.clusters) {
            clusters.push_back({{"id", c.id},
                                {"parent", c.parent},
                                {"size", c.size},
                                {"edges", c.edge_count},
                                {"status", c.status}});
        }
        out.push_back({{"iteration", rec.iteration},
                       {"novel_structure", rec.novel_structure},
                       {"merges", rec.merges},
                       {"splits", rec.splits},
                       {"clusters", std::move(clusters)}});
    }
    return out;
}

inline Json result_to_json(const HclResult& result) {
    Json graphs = Json::array();
    for (const WeightedDag& g : result.graphs) graphs.push_back(graph_to_json(g));
    return Json{{"K", result.num_clusters},
                {"labels", result.labels},
                {"graphs", std::move(graphs)},
                {"converged", result.converged},
                {"trace", trace_to_json(result.trace)}};
}

inline Json posterior_to_json(const VbgmmPosterior& post) {
    Json components = Json::array();
    const Eigen::VectorXd weights = post.mixing_weights();
    for (int i = 0; i < post.num_components(); ++i) {
        Json mean = Json::array();
        for (int d = 0; d < post.dim(); ++d) mean.push_back(post.means(i, d));
        components.push_back({{"alpha", post.alpha(i)},
                              {"beta", post.beta(i)},
                              {"nu", post.nu(i)},
                              {"weight", weights(i)},
                              {"mean", std::move(mean)}});
    }
    return Json{{"components", std::move(components)}, {"jittered", post.jittered}};
}

// ---------------------------------------------------------------------------
// Filesystem helpers

inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& err) {
        throw DataFormatError(path.string() + ": " + err.what());
    }
}

inline MixedDataset load_dataset(const std::filesystem::path& csv_path,
                                 const std::filesystem::path& schema_path) {
    const SchemaFile schema_file = schema_from_json(read_json(schema_path));
    return dataset_from_csv(read_text(csv_path), schema_file);
}

}  // namespace hcl
