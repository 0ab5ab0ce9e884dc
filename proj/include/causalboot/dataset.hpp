#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causalboot/common.hpp"

namespace causalboot {

enum class var_kind { discrete, continuous };

struct variable_info {
    std::string name;
    var_kind kind = var_kind::continuous;
    int cardinality = 0;  // discrete: declared size of {1..k}; 0 = inferred from data
    int dim = 1;          // continuous: components per observation
    bool latent = false;  // unmeasured; never eligible for adjustment/mediation
};

// One variable's value: a category code or a continuous vector.
class cell {
public:
    cell() : discrete_(true), code_(0) {}
    explicit cell(int code) : discrete_(true), code_(code) {}
    explicit cell(double x) : discrete_(false), reals_{x} {}
    explicit cell(std::vector<double> xs) : discrete_(false), reals_(std::move(xs)) {}
    cell(std::span<const double> xs) : discrete_(false), reals_(xs.begin(), xs.end()) {}

    bool is_discrete() const { return discrete_; }
    int code() const { return code_; }
    std::span<const double> reals() const { return reals_; }

    bool operator==(const cell& o) const {
        return discrete_ == o.discrete_ && code_ == o.code_ && reals_ == o.reals_;
    }

private:
    bool discrete_;
    int code_ = 0;
    std::vector<double> reals_;
};

using point = std::vector<cell>;

// Column-typed table of N observations over named variables. Built once via
// add_* and treated as immutable afterwards; all queries are const.
class dataset {
public:
    dataset() = default;

    void add_discrete(std::string name, std::vector<int> values, int cardinality = 0) {
        check_new_column(name, values.size());
        column col;
        col.info.name = name;
        col.info.kind = var_kind::discrete;
        col.info.cardinality = cardinality;
        col.ivals = std::move(values);
        if (cardinality == 0) {
            int mx = 2;
            for (int v : col.ivals) mx = std::max(mx, v);
            col.info.cardinality = mx;
        } else {
            for (int v : col.ivals)
                if (v < 1 || v > cardinality)
                    throw data_error("value " + std::to_string(v) + " of discrete variable '" +
                                     name + "' outside declared range 1.." +
                                     std::to_string(cardinality));
        }
        index_[col.info.name] = cols_.size();
        cols_.push_back(std::move(col));
    }

    void add_continuous(std::string name, std::vector<double> values, int dim = 1) {
        if (dim < 1) throw data_error("continuous variable '" + name + "' needs dimension >= 1");
        if (values.size() % static_cast<size_t>(dim) != 0)
            throw data_error("continuous column '" + name + "' length not a multiple of its dimension");
        check_new_column(name, values.size() / static_cast<size_t>(dim));
        column col;
        col.info.name = name;
        col.info.kind = var_kind::continuous;
        col.info.dim = dim;
        col.rvals = std::move(values);
        index_[col.info.name] = cols_.size();
        cols_.push_back(std::move(col));
    }

    size_t n_rows() const { return n_; }
    size_t n_vars() const { return cols_.size(); }

    bool has(std::string_view name) const { return index_.count(std::string(name)) > 0; }

    const variable_info& info(std::string_view name) const { return col(name).info; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(cols_.size());
        for (const auto& c : cols_) out.push_back(c.info.name);
        return out;
    }

    int dvalue(std::string_view name, size_t row) const {
        const column& c = col(name);
        if (c.info.kind != var_kind::discrete)
            throw data_error("variable '" + std::string(name) + "' is not discrete");
        return c.ivals[row];
    }

    std::span<const double> cvalue(std::string_view name, size_t row) const {
        const column& c = col(name);
        if (c.info.kind != var_kind::continuous)
            throw data_error("variable '" + std::string(name) + "' is not continuous");
        return std::span<const double>(c.rvals.data() + row * c.info.dim,
                                       static_cast<size_t>(c.info.dim));
    }

    cell at(std::string_view name, size_t row) const {
        const column& c = col(name);
        if (c.info.kind == var_kind::discrete) return cell(c.ivals[row]);
        return cell(cvalue(name, row));
    }

    const std::vector<int>& discrete_column(std::string_view name) const {
        const column& c = col(name);
        if (c.info.kind != var_kind::discrete)
            throw data_error("variable '" + std::string(name) + "' is not discrete");
        return c.ivals;
    }

    const std::vector<double>& continuous_column(std::string_view name) const {
        const column& c = col(name);
        if (c.info.kind != var_kind::continuous)
            throw data_error("variable '" + std::string(name) + "' is not continuous");
        return c.rvals;
    }

    // Distinct observed codes of a discrete variable, ascending.
    std::vector<int> observed_support(std::string_view name) const {
        const auto& vals = discrete_column(name);
        std::set<int> s(vals.begin(), vals.end());
        return std::vector<int>(s.begin(), s.end());
    }

    point row_point(std::span<const std::string> vars, size_t row) const {
        point p;
        p.reserve(vars.size());
        for (const auto& v : vars) p.push_back(at(v, row));
        return p;
    }

private:
    struct column {
        variable_info info;
        std::vector<int> ivals;
        std::vector<double> rvals;
    };

    void check_new_column(const std::string& name, size_t rows) {
        if (name.empty()) throw data_error("variable name must be nonempty");
        if (index_.count(name)) throw data_error("duplicate variable '" + name + "'");
        if (cols_.empty())
            n_ = rows;
        else if (rows != n_)
            throw data_error("column '" + name + "' has " + std::to_string(rows) +
                             " rows, expected " + std::to_string(n_));
    }

    const column& col(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end())
            throw data_error("unknown variable '" + std::string(name) + "'");
        return cols_[it->second];
    }

    std::vector<column> cols_;
    std::map<std::string, size_t> index_;
    size_t n_ = 0;
};

}  // namespace causalboot
