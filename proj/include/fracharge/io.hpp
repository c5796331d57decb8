/**
 * @brief JSON and CSV formats for chains, certificates, sampled forms and charge specs.
 *
 * Axes are 1-based in files. Coefficients are JSON numbers when exactly representable
 * as doubles, otherwise "p/q" strings, so exact chains survive a write/read cycle.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flat_norm.hpp"
#include "genfun.hpp"
#include "paraproduct.hpp"

namespace fracharge {

using Json = nlohmann::ordered_json;

// ---- scalars ----

inline Json rational_to_json(const Rational& q) {
    BigInt den = boost::multiprecision::denominator(q);
    BigInt num = boost::multiprecision::numerator(q);
    bool pow2 = (den & (den - 1)) == 0;
    if (pow2 && boost::multiprecision::abs(num) < (BigInt(1) << 53) && den <= (BigInt(1) << 1000)) {
        double v = q.convert_to<double>();
        if (Rational(v) == q) {
            if (den == 1) return Json(num.convert_to<long long>());
            return Json(v);
        }
    }
    return Json(q.str());
}

inline Rational rational_from_json(const Json& j) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_number()) {
        double v = j.get<double>();
        if (!std::isfinite(v)) throw ValidationError("non-finite coefficient");
        return Rational(v);
    }
    if (j.is_string()) {
        try {
            return Rational(j.get<std::string>());
        } catch (const std::exception&) {
            throw ValidationError("malformed rational '" + j.get<std::string>() + "'");
        }
    }
    throw ValidationError("coefficient must be a number or a \"p/q\" string");
}

inline double double_from_json(const Json& j) {
    if (j.is_number()) {
        double v = j.get<double>();
        if (!std::isfinite(v)) throw ValidationError("non-finite value");
        return v;
    }
    if (j.is_string()) return to_double(rational_from_json(j));
    throw ValidationError("expected a number");
}

// ---- chains ----

template <class S>
Json chain_to_json(const Chain<S>& c) {
    Json j;
    j["d"] = c.d;
    j["L"] = c.L;
    j["m"] = c.m;
    Json cells = Json::array();
    for (auto& [cell, v] : c.cells) {
        Json e;
        Json anchor = Json::array();
        for (int i = 0; i < c.d; ++i) anchor.push_back(cell.anchor[i]);
        Json axes = Json::array();
        for (int a : mask_axes(cell.axes)) axes.push_back(a + 1);
        e["anchor"] = anchor;
        e["axes"] = axes;
        if constexpr (std::is_same_v<S, Rational>)
            e["coeff"] = rational_to_json(v);
        else
            e["coeff"] = v;
        cells.push_back(e);
    }
    j["cells"] = cells;
    return j;
}

template <class S>
Chain<S> chain_from_json(const Json& j) {
    try {
        if (!j.is_object()) throw ValidationError("chain must be a JSON object");
        for (const char* k : {"d", "L", "m", "cells"})
            if (!j.contains(k)) throw ValidationError(std::string("chain lacks field '") + k + "'");
        int d = j.at("d").get<int>(), L = j.at("L").get<int>(), m = j.at("m").get<int>();
        if (L > 30) throw ValidationError("grid level above 30 is not supported");
        Chain<S> c(d, L, m);
        if (!j.at("cells").is_array()) throw ValidationError("'cells' must be an array");
        for (auto& e : j.at("cells")) {
            auto& an = e.at("anchor");
            auto& ax = e.at("axes");
            if (!an.is_array() || static_cast<int>(an.size()) != d) throw ValidationError("anchor length differs from d");
            if (!ax.is_array()) throw ValidationError("axes must be an array");
            Cell cell;
            for (int i = 0; i < d; ++i) cell.anchor[i] = an[i].get<std::int64_t>();
            int prev = 0;
            for (auto& a : ax) {
                int k = a.get<int>();
                if (k <= prev || k > d) throw ValidationError("axes must be strictly increasing in 1..d");
                cell.axes |= Mask(1) << (k - 1);
                prev = k;
            }
            if constexpr (std::is_same_v<S, Rational>)
                c.add(cell, rational_from_json(e.at("coeff")));
            else
                c.add(cell, double_from_json(e.at("coeff")));
        }
        return c;
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed chain JSON: ") + ex.what());
    }
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError("'" + path + "' is not valid JSON: " + ex.what());
    }
}

/// write to a temporary and rename, so a failed run leaves no partial file
inline void write_text_file(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write '" + path + "'");
        out << text;
        if (!out) throw Error("cannot write '" + path + "'");
    }
    std::filesystem::rename(tmp, path);
}

template <class S>
Json cert_to_json(const FlatNormCert<S>& c) {
    Json j;
    j["d"] = c.remainder.d;
    j["L"] = c.remainder.L;
    j["m"] = c.remainder.m;
    if constexpr (std::is_same_v<S, Rational>)
        j["value"] = rational_to_json(c.value);
    else
        j["value"] = c.value;
    j["value_float"] = to_double(c.value);
    j["lower_bound"] = c.lower_bound;
    j["solver"] = c.solver;
    j["iterations"] = c.iterations;
    j["filling"] = chain_to_json(c.filling);
    j["remainder"] = chain_to_json(c.remainder);
    return j;
}

// ---- boxes and sampled forms ----

inline Json box_to_json(const NodeBox& b) {
    Json lo = Json::array(), hi = Json::array();
    for (int i = 0; i < b.d; ++i) {
        lo.push_back(b.lo[i]);
        hi.push_back(b.hi[i]);
    }
    return Json{{"lo", lo}, {"hi", hi}};
}

inline NodeBox box_from_json(const Json& j, int d) {
    NodeBox b;
    b.d = d;
    auto& lo = j.at("lo");
    auto& hi = j.at("hi");
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d) throw ValidationError("box length differs from d");
    for (int i = 0; i < d; ++i) {
        b.lo[i] = lo[i].get<std::int64_t>();
        b.hi[i] = hi[i].get<std::int64_t>();
        if (b.hi[i] < b.lo[i]) throw ValidationError("empty box");
    }
    return b;
}

/// {"d","L","m","box":{"lo","hi"},"components":[[axes]...],"values":[[...]...],"holder"?}
/// values are node arrays in row-major order, last axis fastest
inline Json form_to_json(const SampledForm& w) {
    Json j;
    j["d"] = w.d;
    j["L"] = w.L;
    j["m"] = w.m;
    j["box"] = box_to_json(w.box);
    Json comps = Json::array();
    for (Mask I : w.comps) {
        Json ax = Json::array();
        for (int a : mask_axes(I)) ax.push_back(a + 1);
        comps.push_back(ax);
    }
    j["components"] = comps;
    j["values"] = w.values;
    if (w.holder) j["holder"] = Json{{"alpha", w.holder->alpha}, {"lip", w.holder->lip}};
    return j;
}

inline SampledForm form_from_json(const Json& j) {
    try {
        int d = j.at("d").get<int>(), L = j.at("L").get<int>(), m = j.at("m").get<int>();
        if (d < 1 || d > kMaxDim) throw DimensionError("dimension out of range");
        SampledForm w(d, L, m, box_from_json(j.at("box"), d));
        auto& comps = j.at("components");
        auto& vals = j.at("values");
        if (comps.size() != w.comps.size() || vals.size() != w.comps.size())
            throw ValidationError("component count differs from C(d, m)");
        for (std::size_t k = 0; k < comps.size(); ++k) {
            Mask I = 0;
            for (auto& a : comps[k]) {
                int ax = a.get<int>();
                if (ax < 1 || ax > d) throw ValidationError("component axis out of range");
                I |= Mask(1) << (ax - 1);
            }
            int idx = w.comp_index(I);
            if (idx < 0) throw ValidationError("component degree differs from m");
            if (vals[k].size() != w.box.size()) throw ValidationError("value array length differs from the box size");
            for (std::size_t n = 0; n < w.box.size(); ++n) w.values[idx][n] = double_from_json(vals[k][n]);
        }
        if (j.contains("holder")) w.holder = HolderMeta{j["holder"].at("alpha").get<double>(), j["holder"].at("lip").get<double>()};
        return w;
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed form JSON: ") + ex.what());
    }
}

/// 1-D 0-form as "index,value" lines; a "# L=<level>" comment fixes the level
inline std::string form_to_csv(const SampledForm& w) {
    if (w.d != 1 || w.m != 0) throw DimensionError("CSV holds 1-D 0-forms");
    std::ostringstream os;
    os.precision(17);
    os << "# L=" << w.L << "\n";
    if (w.holder) os << "# alpha=" << w.holder->alpha << " lip=" << w.holder->lip << "\n";
    os << "index,value\n";
    for (std::size_t n = 0; n < w.box.size(); ++n) os << w.box.node(n)[0] << "," << w.values[0][n] << "\n";
    return os.str();
}

inline SampledForm form_from_csv(std::istream& in, std::optional<int> level = std::nullopt) {
    std::string line;
    std::vector<std::pair<std::int64_t, double>> rows;
    std::optional<int> L = level;
    std::optional<HolderMeta> hm;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tok;
            HolderMeta h;
            bool have_a = false, have_l = false;
            while (ls >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                try {
                    if (key == "L" && !level) L = std::stoi(val);
                    if (key == "alpha") h.alpha = std::stod(val), have_a = true;
                    if (key == "lip") h.lip = std::stod(val), have_l = true;
                } catch (const std::exception&) {
                    throw ValidationError("bad header value on line " + std::to_string(lineno));
                }
            }
            if (have_a && have_l) hm = h;
            continue;
        }
        if (line.rfind("index", 0) == 0) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("CSV line " + std::to_string(lineno) + " lacks a comma");
        try {
            std::size_t used = 0;
            std::int64_t idx = std::stoll(line.substr(0, comma), &used);
            double v = std::stod(line.substr(comma + 1));
            if (!std::isfinite(v)) throw ValidationError("non-finite value");
            rows.emplace_back(idx, v);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("CSV line " + std::to_string(lineno) + " is malformed");
        }
    }
    if (!L) throw ValidationError("CSV sample file needs a '# L=' header or an explicit level");
    if (rows.empty()) throw ValidationError("CSV sample file has no rows");
    std::sort(rows.begin(), rows.end());
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k].first != rows[k - 1].first + 1) throw ValidationError("CSV node indices must be consecutive");
    NodeBox box;
    box.d = 1;
    box.lo[0] = rows.front().first;
    box.hi[0] = rows.back().first;
    SampledForm w(1, *L, 0, box);
    for (std::size_t k = 0; k < rows.size(); ++k) w.values[0][k] = rows[k].second;
    w.holder = hm;
    return w;
}

/// .csv -> CSV reader, anything else -> JSON form
inline SampledForm read_form_file(const std::string& path, std::optional<int> level = std::nullopt) {
    if (std::filesystem::path(path).extension() == ".csv") {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open '" + path + "'");
        return form_from_csv(in, level);
    }
    return form_from_json(read_json_file(path));
}

// ---- Weierstrass specs ----

inline WeierstrassSpec weierstrass_from_json(const Json& j) {
    WeierstrassSpec s;
    s.a = j.value("a", s.a);
    s.b = j.value("b", s.b);
    s.terms = j.value("terms", s.terms);
    s.phase0 = j.value("phase0", s.phase0);
    s.phase_step = j.value("phase_step", s.phase_step);
    s.scale = j.value("scale", s.scale);
    if (j.contains("alpha")) {
        double a = std::pow(static_cast<double>(s.b), -j.at("alpha").get<double>());
        if (!j.contains("a"))
            s.a = a;
        else if (std::fabs(a - s.a) > 1e-9)
            throw ValidationError("'a' and 'alpha' disagree");
    }
    if (j.contains("direction")) {
        auto& v = j.at("direction");
        if (v.size() > kMaxDim) throw DimensionError("direction longer than the maximum dimension");
        s.direction = {0, 0, 0, 0};
        for (std::size_t i = 0; i < v.size(); ++i) s.direction[i] = v[i].get<int>();
    }
    validate(s);
    return s;
}

inline Json weierstrass_to_json(const WeierstrassSpec& s, int d) {
    Json dir = Json::array();
    for (int i = 0; i < d; ++i) dir.push_back(s.direction[i]);
    return Json{{"a", s.a},         {"b", s.b},          {"terms", s.terms}, {"phase0", s.phase0},
                {"phase_step", s.phase_step}, {"direction", dir}, {"scale", s.scale}, {"alpha", s.alpha()}};
}

// ---- charge specs ----

/// {"type": "form" | "derivative" | "wedge" | "layer_cake", ...}; relative paths resolve against base
inline ChargePtr charge_from_json(const Json& j, const std::filesystem::path& base = {}) {
    try {
        if (!j.is_object() || !j.contains("type")) throw ValidationError("charge spec needs a \"type\"");
        std::string type = j.at("type").get<std::string>();
        auto load_form = [&](const Json& f) {
            if (f.is_string()) {
                auto p = std::filesystem::path(f.get<std::string>());
                if (p.is_relative()) p = base / p;
                return read_form_file(p.string());
            }
            return form_from_json(f);
        };
        if (type == "form") return form_charge(load_form(j.at("form")));
        if (type == "derivative") return exterior_derivative(charge_from_json(j.at("of"), base));
        if (type == "wedge") {
            ParaproductOptions o;
            o.tol = j.value("tol", o.tol);
            o.accelerate = j.value("accelerate", o.accelerate);
            if (j.contains("kernel")) o.profile = parse_profile(j.at("kernel").get<std::string>());
            auto w = charge_from_json(j.at("omega"), base);
            auto e = charge_from_json(j.at("eta"), base);
            if (j.contains("eval_box")) o.eval_box = box_from_json(j.at("eval_box"), w->dim());
            return wedge_charge(make_paraproduct(w, j.at("alpha").get<double>(), e, j.at("beta").get<double>(), o));
        }
        if (type == "layer_cake") {
            int d = j.at("d").get<int>();
            std::vector<double> vals;
            for (auto& v : j.at("cell_values")) vals.push_back(double_from_json(v));
            return std::make_shared<LayerCakeCharge>(
                HolderChargeFn(d, j.at("L").get<int>(), box_from_json(j.at("box"), d), vals, j.at("alpha").get<double>()));
        }
        throw ValidationError("unknown charge type '" + type + "'");
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed charge spec: ") + ex.what());
    }
}

// ---- reports ----

inline Json report_to_json(const ConvergenceReport& r) {
    Json rows = Json::array();
    for (auto& row : r.rows)
        rows.push_back(Json{{"level", row.level},
                            {"term", row.term},
                            {"partial_sum", row.partial_sum},
                            {"estimate", row.estimate},
                            {"fitted_rate", row.fitted_rate},
                            {"resolution", row.resolution}});
    return Json{{"rows", rows},
                {"fitted_rate", r.fitted_rate},
                {"theoretical_rate", r.theoretical_rate},
                {"achieved_tol", r.achieved_tol},
                {"start_level", r.start_level},
                {"truncation_level", r.truncation_level},
                {"accelerated", r.accelerated},
                {"converged", r.converged}};
}

inline std::string report_to_csv(const ConvergenceReport& r, const std::string& header = {}) {
    std::ostringstream os;
    os.precision(17);
    if (!header.empty()) os << header;
    os << "level,term,partial_sum,estimate,fitted_rate,resolution\n";
    for (auto& row : r.rows)
        os << row.level << "," << row.term << "," << row.partial_sum << "," << row.estimate << "," << row.fitted_rate
           << "," << row.resolution << "\n";
    return os.str();
}

/// 64-bit FNV-1a of a string, as 16 hex digits
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline std::string config_hash(const Json& config) { return fnv1a_hex(config.dump()); }

}  // namespace fracharge
