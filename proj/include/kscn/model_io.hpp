#pragma once

// JSON model files. Every model carries a "type" tag; kscn/krvfl share one
// layout, scn/rvfl another, rbfn a third.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "kscn/baselines.hpp"
#include "kscn/error.hpp"
#include "kscn/kscn.hpp"
#include "kscn/randbase.hpp"

namespace kscn {

using Json = nlohmann::json;

namespace detail {

inline Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        rows.push_back(Json(std::vector<double>(r.begin(), r.end())));
    }
    return rows;
}

inline Json nodes_to_json(const std::vector<HiddenNode>& nodes) {
    Json arr = Json::array();
    for (const auto& n : nodes) arr.push_back({{"w", n.w}, {"b", n.b}});
    return arr;
}

inline Json stats_to_json(const NormStats& stats) {
    Json arr = Json::array();
    for (const auto& s : stats) arr.push_back(Json::array({s.min, s.max}));
    return arr;
}

/// Typed field access with the JSON path in every error.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const Json& at(const std::string& key) const {
        if (!j_.is_object()) throw SchemaError(path_, "expected an object");
        auto it = j_.find(key);
        if (it == j_.end()) throw SchemaError(join(key), "missing field");
        return *it;
    }
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) const { return as_number(at(key), join(key)); }

    std::size_t count(const std::string& key) const {
        const Json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw SchemaError(join(key), "expected a non-negative integer");
        }
        return v.get<std::size_t>();
    }

    std::string string(const std::string& key) const {
        const Json& v = at(key);
        if (!v.is_string()) throw SchemaError(join(key), "expected a string");
        return v.get<std::string>();
    }

    static double as_number(const Json& v, const std::string& path) {
        if (!v.is_number()) throw SchemaError(path, "expected a number");
        return v.get<double>();
    }

    static std::vector<double> as_vector(const Json& v, const std::string& path) {
        if (!v.is_array()) throw SchemaError(path, "expected an array");
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    Mat matrix(const std::string& key, std::size_t cols) const {
        const Json& v = at(key);
        const std::string p = join(key);
        if (!v.is_array()) throw SchemaError(p, "expected an array of rows");
        Mat m(v.size(), cols);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string rp = p + "[" + std::to_string(i) + "]";
            auto row = as_vector(v[i], rp);
            if (row.size() != cols) {
                throw SchemaError(rp, "expected " + std::to_string(cols) + " entries, found " +
                                          std::to_string(row.size()));
            }
            std::copy(row.begin(), row.end(), m.row(i).begin());
        }
        return m;
    }

    std::vector<HiddenNode> nodes(std::size_t m) const {
        const Json& v = at("nodes");
        if (!v.is_array()) throw SchemaError(join("nodes"), "expected an array");
        std::vector<HiddenNode> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            Reader r(v[i], join("nodes") + "[" + std::to_string(i) + "]");
            HiddenNode n;
            n.w = as_vector(r.at("w"), r.join("w"));
            if (n.w.size() != m) throw SchemaError(r.join("w"), "expected " + std::to_string(m) + " weights");
            n.b = r.number("b");
            out.push_back(std::move(n));
        }
        return out;
    }

    NormStats stats(std::size_t m) const {
        const Json& v = at("norm_stats");
        const std::string p = join("norm_stats");
        if (!v.is_array() || v.size() != m) {
            throw SchemaError(p, "expected " + std::to_string(m) + " [min, max] pairs");
        }
        NormStats out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string ip = p + "[" + std::to_string(i) + "]";
            auto pair = as_vector(v[i], ip);
            if (pair.size() != 2 || pair[1] < pair[0]) throw SchemaError(ip, "expected [min, max] with max >= min");
            out.push_back({pair[0], pair[1]});
        }
        return out;
    }

private:
    const Json& j_;
    std::string path_;
};

}  // namespace detail

inline Json to_json(const KscnModel& model, const std::string& type = "kscn") {
    return Json{{"type", type},
                {"m", model.m},
                {"M", model.M},
                {"kernel", {{"c", model.kernel.c}, {"tau", model.kernel.tau}}},
                {"nodes", detail::nodes_to_json(model.nodes)},
                {"alpha", detail::mat_to_json(model.alpha)},
                {"x_train", detail::mat_to_json(model.x_train)},
                {"norm_stats", detail::stats_to_json(model.norm_stats)}};
}

inline Json to_json(const ScnModel& model, const std::string& type = "scn") {
    return Json{{"type", type},
                {"m", model.norm_stats.size()},
                {"M", model.M},
                {"nodes", detail::nodes_to_json(model.nodes)},
                {"beta", detail::mat_to_json(model.beta)},
                {"norm_stats", detail::stats_to_json(model.norm_stats)}};
}

inline Json to_json(const RbfnModel& model, const std::string& type = "rbfn") {
    return Json{{"type", type},
                {"m", model.norm_stats.size()},
                {"M", model.M},
                {"c", model.c},
                {"centers", detail::mat_to_json(model.centers)},
                {"beta", detail::mat_to_json(model.beta)},
                {"norm_stats", detail::stats_to_json(model.norm_stats)}};
}

/// A model file of any supported type.
struct AnyModel {
    std::string type;
    std::variant<KscnModel, ScnModel, RbfnModel> model;

    std::size_t inputs() const {
        return std::visit([](const auto& m) -> std::size_t { return m.norm_stats.size(); }, model);
    }
};

inline Mat predict(const AnyModel& any, const Mat& X_raw) {
    if (X_raw.cols() != any.inputs()) {
        throw DimensionMismatch("predict: model expects " + std::to_string(any.inputs()) +
                                " input columns, got " + std::to_string(X_raw.cols()));
    }
    return std::visit([&](const auto& m) { return predict(m, X_raw); }, any.model);
}

inline AnyModel from_json(const Json& j) {
    detail::Reader r(j, "");
    AnyModel out;
    out.type = r.string("type");
    const std::size_t m = r.count("m");
    const std::size_t M = r.count("M");
    if (M == 0) throw SchemaError("M", "must be at least 1");
    if (out.type == "kscn" || out.type == "krvfl") {
        KscnModel k;
        k.m = m;
        k.M = M;
        detail::Reader kr(r.at("kernel"), "kernel");
        k.kernel.c = kr.number("c");
        k.kernel.tau = kr.number("tau");
        if (!(k.kernel.c > 0.0)) throw SchemaError("kernel.c", "must be positive");
        if (!(k.kernel.tau > 0.0)) throw SchemaError("kernel.tau", "must be positive");
        k.nodes = r.nodes(m);
        k.x_train = r.matrix("x_train", m);
        k.alpha = r.matrix("alpha", M);
        if (k.alpha.rows() != k.x_train.rows()) {
            throw SchemaError("alpha", "row count must equal x_train row count");
        }
        k.norm_stats = r.stats(m);
        out.model = std::move(k);
    } else if (out.type == "scn" || out.type == "rvfl") {
        ScnModel s;
        s.M = M;
        s.nodes = r.nodes(m);
        s.beta = r.matrix("beta", M);
        if (s.beta.rows() != s.nodes.size()) throw SchemaError("beta", "row count must equal node count");
        s.norm_stats = r.stats(m);
        out.model = std::move(s);
    } else if (out.type == "rbfn") {
        RbfnModel b;
        b.M = M;
        b.c = r.number("c");
        if (!(b.c > 0.0)) throw SchemaError("c", "must be positive");
        b.centers = r.matrix("centers", m);
        b.beta = r.matrix("beta", M);
        if (b.beta.rows() != b.centers.rows()) throw SchemaError("beta", "row count must equal center count");
        b.norm_stats = r.stats(m);
        out.model = std::move(b);
    } else {
        throw SchemaError("type", "unknown model type '" + out.type + "'");
    }
    return out;
}

/// Writes through a temporary file and renames it into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Model>
void save_model(const std::filesystem::path& path, const Model& model, const std::string& type) {
    write_text_atomic(path, to_json(model, type).dump(1) + "\n");
}

inline void save_model(const std::filesystem::path& path, const KscnModel& model) {
    save_model(path, model, "kscn");
}

inline AnyModel parse_model(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw SchemaError("", std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

inline AnyModel load_any_model(const std::filesystem::path& path) {
    return parse_model(read_text(path));
}

/// Loads a kscn (or krvfl) model file.
inline KscnModel load_model(const std::filesystem::path& path) {
    AnyModel any = load_any_model(path);
    if (auto* k = std::get_if<KscnModel>(&any.model)) return std::move(*k);
    throw SchemaError("type", "expected a kscn model, found '" + any.type + "'");
}

}  // namespace kscn
