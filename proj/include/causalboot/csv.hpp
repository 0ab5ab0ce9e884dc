#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "causalboot/common.hpp"
#include "causalboot/dataset.hpp"
#include "causalboot/graph.hpp"

namespace causalboot {

// ---- RFC-4180-style CSV ----

inline std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                if (any || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                    any = false;
                }
                break;
            default:
                field += c;
                any = true;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- key = value sidecar ----

inline void write_sidecar(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write sidecar '" + path + "'");
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
}

inline std::map<std::string, std::string> read_sidecar(const std::string& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::string sidecar_path_for(const std::string& csv_path) {
    auto dot = csv_path.rfind('.');
    std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
    return stem + ".meta";
}

// ---- dataset <-> CSV ----
//
// Header row; discrete columns as integers; a continuous variable of
// dimension d > 1 spans columns name[0] .. name[d-1]. With image_blob set,
// that variable's values live row-major in a raw byte file next to the CSV
// (recorded in the sidecar) instead of inline columns.

namespace detail {

inline std::string dim_header(const std::string& name, int d) {
    return name + "[" + std::to_string(d) + "]";
}

inline std::optional<std::pair<std::string, int>> parse_dim_header(const std::string& h) {
    if (h.empty() || h.back() != ']') return std::nullopt;
    auto open = h.rfind('[');
    if (open == std::string::npos || open == 0) return std::nullopt;
    int idx = 0;
    auto body = h.substr(open + 1, h.size() - open - 2);
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), idx);
    if (ec != std::errc{} || p != body.data() + body.size() || idx < 0) return std::nullopt;
    return std::make_pair(h.substr(0, open), idx);
}

}  // namespace detail

inline void write_dataset_csv(const dataset& data, const std::string& path,
                              const std::string& image_blob_var = "") {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw data_error("cannot write '" + path + "'");

    auto names = data.names();
    std::string header;
    for (const auto& name : names) {
        if (name == image_blob_var) continue;
        const auto& vi = data.info(name);
        if (vi.kind == var_kind::continuous && vi.dim > 1) {
            for (int d = 0; d < vi.dim; ++d) {
                if (!header.empty()) header += ',';
                header += csv_quote(detail::dim_header(name, d));
            }
        } else {
            if (!header.empty()) header += ',';
            header += csv_quote(name);
        }
    }
    out << header << "\n";

    std::string line;
    for (size_t row = 0; row < data.n_rows(); ++row) {
        line.clear();
        for (const auto& name : names) {
            if (name == image_blob_var) continue;
            const auto& vi = data.info(name);
            if (vi.kind == var_kind::discrete) {
                if (!line.empty()) line += ',';
                line += std::to_string(data.dvalue(name, row));
            } else {
                for (double v : data.cvalue(name, row)) {
                    if (!line.empty()) line += ',';
                    line += format_double(v);
                }
            }
        }
        out << line << "\n";
    }
    if (!out) throw data_error("failed writing '" + path + "'");

    if (!image_blob_var.empty()) {
        const auto& vi = data.info(image_blob_var);
        if (vi.kind != var_kind::continuous)
            throw data_error("blob storage requires a continuous variable");
        std::string blob_path = sidecar_path_for(path) + ".blob";
        std::ofstream blob(blob_path, std::ios::trunc | std::ios::binary);
        if (!blob) throw data_error("cannot write blob '" + blob_path + "'");
        for (size_t row = 0; row < data.n_rows(); ++row) {
            for (double v : data.cvalue(image_blob_var, row)) {
                if (v < 0.0 || v > 255.0)
                    throw data_error("blob values must fit in a byte; '" + image_blob_var +
                                     "' has " + format_double(v));
                unsigned char b = static_cast<unsigned char>(v + 0.5);
                blob.put(static_cast<char>(b));
            }
        }
        write_sidecar(sidecar_path_for(path), {{"image_blob", blob_path},
                                               {"image_var", image_blob_var},
                                               {"image_dim", std::to_string(vi.dim)}});
    }
}

// Column kinds: graph-declared variables take their declared kind; others
// are discrete when every value parses as an integer, continuous otherwise.
inline dataset read_dataset_csv(const std::string& path, const causal_graph* hints = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "'");
    auto rows = parse_csv(in);
    if (rows.empty()) throw data_error("'" + path + "' is empty");
    const auto& header = rows.front();
    size_t n = rows.size() - 1;

    for (size_t r = 1; r < rows.size(); ++r)
        if (rows[r].size() != header.size())
            throw data_error(path + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));

    // group name[k] headers into one multi-dimensional variable
    struct group {
        std::string name;
        std::vector<size_t> field_idx;  // ordered by dimension index
        bool bracketed = false;
    };
    std::vector<group> groups;
    std::map<std::string, size_t> group_of;
    for (size_t f = 0; f < header.size(); ++f) {
        auto parsed = detail::parse_dim_header(header[f]);
        std::string name = parsed ? parsed->first : header[f];
        auto it = group_of.find(name);
        if (it == group_of.end()) {
            group_of[name] = groups.size();
            groups.push_back({name, {}, parsed.has_value()});
            it = group_of.find(name);
        }
        group& g = groups[it->second];
        if (parsed) {
            if (!g.bracketed && !g.field_idx.empty())
                throw data_error(path + ": column '" + header[f] + "' mixes plain and indexed headers");
            g.bracketed = true;
            if (static_cast<size_t>(parsed->second) != g.field_idx.size())
                throw data_error(path + ": indexed columns of '" + name + "' out of order");
        } else if (!g.field_idx.empty()) {
            throw data_error(path + ": duplicate column '" + name + "'");
        }
        g.field_idx.push_back(f);
    }

    dataset out;
    for (const auto& g : groups) {
        const variable_info* hint = nullptr;
        if (hints && hints->has(g.name)) hint = &hints->info(g.name);

        bool discrete;
        if (hint) {
            discrete = hint->kind == var_kind::discrete;
            if (!discrete && static_cast<size_t>(hint->dim) != g.field_idx.size())
                throw data_error(path + ": variable '" + g.name + "' has " +
                                 std::to_string(g.field_idx.size()) + " column(s), graph declares dimension " +
                                 std::to_string(hint->dim));
            if (discrete && g.field_idx.size() != 1)
                throw data_error(path + ": discrete variable '" + g.name + "' must be a single column");
        } else if (g.field_idx.size() > 1) {
            discrete = false;
        } else {
            discrete = true;
            size_t f = g.field_idx[0];
            for (size_t r = 1; r <= n && discrete; ++r) {
                const std::string& s = rows[r][f];
                int iv;
                auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), iv);
                if (ec != std::errc{} || p != s.data() + s.size()) discrete = false;
            }
        }

        if (discrete) {
            size_t f = g.field_idx[0];
            std::vector<int> vals(n);
            for (size_t r = 1; r <= n; ++r) {
                const std::string& s = rows[r][f];
                auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), vals[r - 1]);
                if (ec != std::errc{} || p != s.data() + s.size())
                    throw data_error(path + ": value '" + s + "' of discrete variable '" + g.name +
                                     "' is not an integer (row " + std::to_string(r + 1) + ")");
            }
            out.add_discrete(g.name, std::move(vals), hint ? hint->cardinality : 0);
        } else {
            int dim = static_cast<int>(g.field_idx.size());
            std::vector<double> vals;
            vals.reserve(n * g.field_idx.size());
            for (size_t r = 1; r <= n; ++r) {
                for (size_t f : g.field_idx) {
                    const std::string& s = rows[r][f];
                    try {
                        size_t used = 0;
                        double v = std::stod(s, &used);
                        if (used != s.size()) throw std::invalid_argument(s);
                        vals.push_back(v);
                    } catch (const std::exception&) {
                        throw data_error(path + ": value '" + s + "' of '" + g.name +
                                         "' is not numeric (row " + std::to_string(r + 1) + ")");
                    }
                }
            }
            out.add_continuous(g.name, std::move(vals), dim);
        }
    }

    // attach a blob-stored variable when the sidecar references one
    auto meta = read_sidecar(sidecar_path_for(path));
    auto blob_it = meta.find("image_blob");
    if (blob_it != meta.end()) {
        const std::string& var = meta.at("image_var");
        int dim = std::stoi(meta.at("image_dim"));
        std::ifstream blob(blob_it->second, std::ios::binary);
        if (!blob) throw data_error("cannot open blob '" + blob_it->second + "'");
        std::vector<double> vals;
        vals.reserve(n * static_cast<size_t>(dim));
        char c;
        while (blob.get(c)) vals.push_back(static_cast<double>(static_cast<unsigned char>(c)));
        if (vals.size() != n * static_cast<size_t>(dim))
            throw data_error("blob '" + blob_it->second + "' holds " +
                             std::to_string(vals.size()) + " bytes, expected " +
                             std::to_string(n * static_cast<size_t>(dim)));
        out.add_continuous(var, std::move(vals), dim);
    }
    return out;
}

}  // namespace causalboot
