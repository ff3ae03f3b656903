#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pplglm/error.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/inference.hpp"
#include "pplglm/sim.hpp"

namespace pplglm::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------- CSV input

/// Splits CSV text into records. Quoted fields may contain commas, doubled
/// quotes and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char ch;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
        row.clear();
        any = false;
    };
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\n') {
            end_row();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    if (quoted) fail(ErrorKind::Data, "unterminated quoted field in CSV");
    if (any) end_row();
    return rows;
}

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

inline bool parse_number(const std::string& text, double& out) {
    std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

/**
 * Reads a headed numeric CSV. `response` names the response column; columns
 * listed in `one_hot` are treated as categorical and expanded to indicator
 * columns for every level except the first in sorted order.
 */
inline Dataset read_dataset(std::istream& in, const std::string& response, const Family& family,
                            const std::vector<std::string>& one_hot = {}) {
    auto rows = parse_csv(in);
    if (rows.empty()) fail(ErrorKind::Data, "CSV input is empty");
    std::vector<std::string> header;
    for (auto& h : rows[0]) header.push_back(trim(h));
    const std::size_t width = header.size();
    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) fail(ErrorKind::Config, "column '" + name + "' not found in the CSV header");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ycol = find_col(response);
    std::set<std::size_t> categorical;
    for (const auto& name : one_hot) {
        std::size_t c = find_col(name);
        if (c == ycol) fail(ErrorKind::Config, "the response cannot be one-hot encoded");
        categorical.insert(c);
    }
    const std::size_t n = rows.size() - 1;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            fail(ErrorKind::Data, "row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                      " fields, expected " + std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            std::string v = trim(rows[r][c]);
            if (v.empty() || v == "NA" || v == "NaN" || v == "nan")
                fail(ErrorKind::Data, "missing value at row " + std::to_string(r) + ", column '" + header[c] + "'");
        }
    }

    struct Column {
        std::size_t source;
        std::string name;
        std::string level;  // empty for numeric columns
    };
    std::vector<Column> cols;
    for (std::size_t c = 0; c < width; ++c) {
        if (c == ycol) continue;
        if (!categorical.count(c)) {
            cols.push_back({c, header[c], ""});
            continue;
        }
        std::set<std::string> levels;
        for (std::size_t r = 1; r < rows.size(); ++r) levels.insert(trim(rows[r][c]));
        auto it = levels.begin();
        if (it != levels.end()) ++it;  // reference level
        for (; it != levels.end(); ++it) cols.push_back({c, header[c] + "_" + *it, *it});
    }

    Dataset d;
    d.X.resize(static_cast<Index>(n), static_cast<Index>(cols.size()));
    d.y.resize(static_cast<Index>(n));
    for (const auto& col : cols) d.names.push_back(col.name);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto i = static_cast<Index>(r - 1);
        double v;
        if (!parse_number(rows[r][ycol], v))
            fail(ErrorKind::Data, "non-numeric response at row " + std::to_string(r));
        d.y(i) = v;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const auto& col = cols[k];
            const auto j = static_cast<Index>(k);
            if (!col.level.empty()) {
                d.X(i, j) = trim(rows[r][col.source]) == col.level ? 1.0 : 0.0;
            } else if (parse_number(rows[r][col.source], v)) {
                d.X(i, j) = v;
            } else {
                fail(ErrorKind::Data, "non-numeric value at row " + std::to_string(r) + ", column '" +
                                          col.name + "' (use one-hot encoding for categorical columns)");
            }
        }
    }
    validate(d, family);
    return d;
}

inline Dataset read_dataset(const std::string& path, const std::string& response, const Family& family,
                            const std::vector<std::string>& one_hot = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Data, "cannot open '" + path + "'");
    return read_dataset(in, response, family, one_hot);
}

/// Writes a dataset as CSV with response column `y`.
inline void write_dataset(std::ostream& os, const Dataset& d) {
    for (Index j = 0; j < d.p(); ++j) os << d.column_name(j) << ',';
    os << "y\n";
    char buf[40];
    for (Index i = 0; i < d.n(); ++i) {
        for (Index j = 0; j < d.p(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", d.X(i, j));
            os << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", d.y(i));
        os << buf << '\n';
    }
}

// ------------------------------------------------------------- key=value config

/// Flat `key = value` settings; `#` starts a comment.
class Config {
public:
    static Config parse(std::istream& in) {
        Config cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            if (key.empty()) fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = trim(line.substr(eq + 1));
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
        return parse(in);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        double v;
        if (!parse_number(values_.at(key), v)) fail(ErrorKind::Config, "setting '" + key + "' is not a number");
        return v;
    }

    long integer(const std::string& key, long fallback) const {
        double v = number(key, static_cast<double>(fallback));
        if (v != std::floor(v)) fail(ErrorKind::Config, "setting '" + key + "' must be an integer");
        return static_cast<long>(v);
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& part : split(get(key, ""))) {
            double v;
            if (!parse_number(part, v)) fail(ErrorKind::Config, "setting '" + key + "' has a non-numeric entry");
            out.push_back(v);
        }
        return out;
    }

    static std::vector<std::string> split(const std::string& text) {
        std::vector<std::string> out;
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ',')) {
            part = trim(part);
            if (!part.empty()) out.push_back(part);
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

inline std::vector<Method> parse_methods(const std::string& text) {
    if (text == "all") return {Method::Ppl, Method::Polyhedral, Method::Naive};
    std::vector<Method> out;
    for (const auto& part : Config::split(text)) {
        Method m = parse_method(part);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) fail(ErrorKind::Config, "no methods requested");
    return out;
}

inline std::string join_methods(const std::vector<Method>& ms) {
    std::string out;
    for (Method m : ms) out += (out.empty() ? "" : ",") + std::string(to_string(m));
    return out;
}

inline IndexSet one_based(const std::vector<double>& v, const std::string& key) {
    IndexSet out;
    for (double x : v) {
        if (x < 1 || x != std::floor(x)) fail(ErrorKind::Config, "setting '" + key + "' needs positive integers");
        out.push_back(static_cast<Index>(x) - 1);
    }
    return out;
}

/// Scenario from a config, starting at the family defaults.
inline Scenario scenario_from(const Config& cfg) {
    Family fam = parse_family(cfg.get("family", "logistic"));
    Scenario s = Scenario::defaults(fam.kind);
    s.n = cfg.integer("n", s.n);
    s.p = cfg.integer("p", s.p);
    s.beta0 = cfg.number("beta0", s.beta0);
    if (cfg.has("support")) s.support = one_based(cfg.numbers("support"), "support");
    if (cfg.has("beta")) s.beta_values = cfg.numbers("beta");
    s.phi = cfg.number("phi", s.phi);
    s.mode = parse_lambda_mode(cfg.get("lambda_mode", std::string(to_string(s.mode))));
    if (cfg.has("lambda_grid")) {
        auto g = cfg.numbers("lambda_grid");
        if (g.size() != 3) fail(ErrorKind::Config, "lambda_grid must be lo,hi,k");
        s.lambda_lo = g[0];
        s.lambda_hi = g[1];
        if (g[2] != std::floor(g[2])) fail(ErrorKind::Config, "lambda_grid count must be an integer");
        s.lambda_count = static_cast<int>(g[2]);
    }
    if (cfg.has("lambdas")) s.fixed_lambdas = cfg.numbers("lambdas");
    s.split_frac = cfg.number("split_frac", s.split_frac);
    s.scale = parse_lambda_scale(cfg.get("lambda_scale", std::string(to_string(s.scale))));
    s.replicates = static_cast<int>(cfg.integer("replicates", s.replicates));
    long seed = cfg.integer("seed", static_cast<long>(s.seed));
    if (seed < 0) fail(ErrorKind::Config, "seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.alpha = cfg.number("alpha", s.alpha);
    if (cfg.has("methods")) s.methods = parse_methods(cfg.get("methods", ""));
    if (cfg.has("tracked")) s.tracked = one_based(cfg.numbers("tracked"), "tracked");
    s.check();
    return s;
}

// ----------------------------------------------------------------- formatting

inline std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline Json number_json(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double json_number(const Json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        fail(ErrorKind::Data, "unexpected string '" + s + "' where a number was expected");
    }
    return j.get<double>();
}

inline Json union_json(const IntervalUnion<double>& u) {
    Json arr = Json::array();
    for (const auto& iv : u) arr.push_back(Json::array({number_json(iv.lo), number_json(iv.hi)}));
    return arr;
}

inline IntervalUnion<double> union_from_json(const Json& arr) {
    std::vector<Interval<double>> pieces;
    for (const auto& iv : arr) pieces.push_back({json_number(iv.at(0)), json_number(iv.at(1))});
    return IntervalUnion<double>(std::move(pieces), 0.0);
}

inline Json report_json(const InferenceReport& rep) {
    Json j;
    j["family"] = std::string(to_string(rep.family.kind));
    j["n"] = rep.n;
    j["p"] = rep.p;
    Json model = Json::array();
    for (std::size_t k = 0; k < rep.model.size(); ++k)
        model.push_back({{"index", rep.model[k] + 1}, {"name", rep.names[k]}, {"sign", rep.signs[k]}});
    j["model"] = model;
    j["lambda"] = {{"value", number_json(rep.lambda)}, {"mode", std::string(to_string(rep.mode))}};
    if (!rep.grid.empty()) {
        Json g = Json::array();
        for (double v : rep.grid) g.push_back(v);
        j["lambda"]["grid"] = g;
    }
    j["alpha"] = rep.alpha;
    j["fit"] = {{"intercept", number_json(rep.beta0)}, {"phi", number_json(rep.phi)}, {"ridge_used", rep.ridge_used}};
    Json coefs = Json::array();
    for (const auto& ci : rep.coefficients) {
        Json c;
        c["index"] = ci.index + 1;
        c["name"] = ci.name;
        c["method"] = std::string(to_string(ci.method));
        c["ok"] = ci.ok;
        if (!ci.ok) c["error"] = ci.error;
        c["estimate"] = number_json(ci.estimate);
        c["ci"] = Json::array({number_json(ci.lo), number_json(ci.hi)});
        c["p_value"] = number_json(ci.p_value);
        c["sd"] = number_json(ci.sd);
        c["support"] = union_json(ci.support);
        c["diagnostics"] = ci.diagnostics;
        coefs.push_back(std::move(c));
    }
    j["coefficients"] = coefs;
    j["diagnostics"] = rep.diagnostics;
    Json settings = Json::object();
    for (const auto& [k, v] : rep.settings) settings[k] = v;
    j["settings"] = settings;
    return j;
}

/// Reads back a report written by report_json.
inline InferenceReport report_from_json(const Json& j) {
    InferenceReport rep;
    rep.family = parse_family(j.at("family").get<std::string>());
    rep.n = j.at("n").get<Index>();
    rep.p = j.at("p").get<Index>();
    for (const auto& m : j.at("model")) {
        rep.model.push_back(m.at("index").get<Index>() - 1);
        rep.names.push_back(m.at("name").get<std::string>());
        rep.signs.push_back(m.at("sign").get<int>());
    }
    rep.lambda = json_number(j.at("lambda").at("value"));
    rep.mode = parse_lambda_mode(j.at("lambda").at("mode").get<std::string>());
    if (j.at("lambda").contains("grid")) rep.grid = j.at("lambda").at("grid").get<std::vector<double>>();
    rep.alpha = j.at("alpha").get<double>();
    rep.beta0 = json_number(j.at("fit").at("intercept"));
    rep.phi = json_number(j.at("fit").at("phi"));
    rep.ridge_used = j.at("fit").at("ridge_used").get<bool>();
    for (const auto& c : j.at("coefficients")) {
        CoefficientInference ci;
        ci.index = c.at("index").get<Index>() - 1;
        ci.name = c.at("name").get<std::string>();
        ci.method = parse_method(c.at("method").get<std::string>());
        ci.ok = c.at("ok").get<bool>();
        if (c.contains("error")) ci.error = c.at("error").get<std::string>();
        ci.estimate = json_number(c.at("estimate"));
        ci.lo = json_number(c.at("ci").at(0));
        ci.hi = json_number(c.at("ci").at(1));
        ci.p_value = json_number(c.at("p_value"));
        ci.sd = json_number(c.at("sd"));
        ci.support = union_from_json(c.at("support"));
        ci.diagnostics = c.at("diagnostics").get<std::vector<std::string>>();
        rep.coefficients.push_back(std::move(ci));
    }
    rep.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("settings").items()) rep.settings[k] = v.get<std::string>();
    return rep;
}

/// One row per coefficient and method.
inline void write_report_csv(std::ostream& os, const InferenceReport& rep) {
    os << "index,name,method,estimate,ci_lo,ci_hi,width,p_value,ok,support\n";
    for (const auto& ci : rep.coefficients) {
        std::string support;
        for (const auto& iv : ci.support) support += (support.empty() ? "" : " ") + ("[" + fmt(iv.lo) + ";" + fmt(iv.hi) + "]");
        os << ci.index + 1 << ',' << ci.name << ',' << to_string(ci.method) << ',' << fmt(ci.estimate) << ','
           << fmt(ci.lo) << ',' << fmt(ci.hi) << ',' << fmt(ci.hi - ci.lo) << ',' << fmt(ci.p_value) << ','
           << (ci.ok ? 1 : 0) << ',' << support << '\n';
    }
}

/// Wide summary: one row per penalty setting and method.
inline void write_summary_csv(std::ostream& os, const SummaryTable& t) {
    os << "lambda,method,replicates,avg_type1,avg_model_size,n_empty,n_failed,n_coef_errors";
    for (Index j : t.scenario.tracked) {
        std::string b = "b" + std::to_string(j + 1);
        os << ',' << b << "_lo," << b << "_hi," << b << "_width," << b << "_coverage," << b << "_selected," << b
           << "_infinite," << b << "_excluded";
    }
    os << '\n';
    for (const auto& r : t.rows) {
        os << (std::isnan(r.lambda) ? std::string("datadriven") : fmt(r.lambda)) << ',' << to_string(r.method) << ','
           << r.replicates << ',' << fmt(r.avg_type1) << ',' << fmt(r.avg_model_size) << ',' << r.empty << ','
           << r.failed << ',' << r.coef_errors;
        for (const auto& c : r.tracked)
            os << ',' << fmt(c.avg_lo) << ',' << fmt(c.avg_hi) << ',' << fmt(c.avg_width) << ',' << fmt(c.coverage)
               << ',' << c.selected << ',' << c.infinite << ',' << c.excluded;
        os << '\n';
    }
}

/// Long format for plotting: one row per setting, method and tracked coefficient.
inline void write_curves_csv(std::ostream& os, const SummaryTable& t) {
    os << "lambda,method,avg_type1,avg_model_size,coefficient,coverage,avg_width\n";
    for (const auto& r : t.rows) {
        std::string lam = std::isnan(r.lambda) ? std::string("datadriven") : fmt(r.lambda);
        for (const auto& c : r.tracked)
            os << lam << ',' << to_string(r.method) << ',' << fmt(r.avg_type1) << ',' << fmt(r.avg_model_size) << ",b"
               << c.index + 1 << ',' << fmt(c.coverage) << ',' << fmt(c.avg_width) << '\n';
    }
}

/// Scenario settings in key=value form, for provenance in outputs.
inline std::map<std::string, std::string> scenario_settings_map(const Scenario& s) {
    auto list = [](const auto& v, auto f) {
        std::string out;
        for (const auto& x : v) out += (out.empty() ? "" : ",") + f(x);
        return out;
    };
    auto idx = [](Index j) { return std::to_string(j + 1); };
    return {{"family", std::string(to_string(s.family.kind))},
            {"n", std::to_string(s.n)},
            {"p", std::to_string(s.p)},
            {"beta0", fmt(s.beta0)},
            {"support", list(s.support, idx)},
            {"beta", list(s.beta_values, [](double v) { return fmt(v); })},
            {"phi", fmt(s.phi)},
            {"lambda_mode", std::string(to_string(s.mode))},
            {"lambda_grid", fmt(s.lambda_lo) + "," + fmt(s.lambda_hi) + "," + std::to_string(s.lambda_count)},
            {"lambdas", list(s.fixed_lambdas, [](double v) { return fmt(v); })},
            {"lambda_scale", std::string(to_string(s.scale))},
            {"split_frac", fmt(s.split_frac)},
            {"replicates", std::to_string(s.replicates)},
            {"seed", std::to_string(s.seed)},
            {"alpha", fmt(s.alpha)},
            {"methods", join_methods(s.methods)},
            {"tracked", list(s.tracked, idx)}};
}

}  // namespace pplglm::io
