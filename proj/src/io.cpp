#include "varprof/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "varprof/numerics.hpp"

namespace varprof {

namespace {

Eigen::MatrixXd parse_matrix(const nlohmann::json& rows, const char* field) {
    if (!rows.is_array() || rows.empty())
        throw ValidationError(std::string("profile document: '") + field +
                              "' must be a non-empty array of rows");
    const std::size_t n = rows.size();
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || row.size() != n)
            throw ValidationError(std::string("profile document: '") + field + "' row " +
                                  std::to_string(i) + " has length " +
                                  std::to_string(row.is_array() ? row.size() : 0) +
                                  ", expected " + std::to_string(n));
        for (std::size_t j = 0; j < n; ++j) {
            if (!row[j].is_number())
                throw ValidationError(std::string("profile document: '") + field + "' entry (" +
                                      std::to_string(i) + "," + std::to_string(j) +
                                      ") is not a number");
            m(i, j) = row[j].get<double>();
        }
    }
    return m;
}

}  // namespace

Profile profile_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
        throw ValidationError("profile document: missing string field 'kind'");
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "block") {
        if (!doc.contains("sigma"))
            throw ValidationError("profile document: block profile needs 'sigma'");
        if (!doc.contains("alpha") || !doc["alpha"].is_array())
            throw ValidationError("profile document: block profile needs array 'alpha'");
        const Eigen::MatrixXd sigma = parse_matrix(doc["sigma"], "sigma");
        const auto& aj = doc["alpha"];
        Eigen::VectorXd alpha(aj.size());
        for (std::size_t i = 0; i < aj.size(); ++i) {
            if (!aj[i].is_number())
                throw ValidationError("profile document: 'alpha' entry " + std::to_string(i) +
                                      " is not a number");
            alpha(i) = aj[i].get<double>();
        }
        return BlockProfile::make(sigma, alpha);
    }
    if (kind == "grid") {
        const char* field = doc.contains("values") ? "values" : "sigma";
        if (!doc.contains(field))
            throw ValidationError("profile document: grid profile needs 'values'");
        const Eigen::MatrixXd values = parse_matrix(doc[field], field);
        if (doc.contains("resolution")) {
            const long res = doc["resolution"].get<long>();
            if (res != values.rows())
                throw ValidationError("profile document: 'resolution' " + std::to_string(res) +
                                      " does not match values dimension " +
                                      std::to_string(values.rows()));
        }
        return GridProfile::make(values);
    }
    throw ValidationError("profile document: unknown kind '" + kind + "'");
}

Profile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("profile: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("profile: malformed document '" + path + "': " + e.what());
    }
    return profile_from_json(doc);
}

ordered_json profile_to_json(const Profile& p) {
    ordered_json doc;
    if (const auto* b = std::get_if<BlockProfile>(&p)) {
        doc["kind"] = "block";
        auto rows = ordered_json::array();
        for (int i = 0; i < b->n; ++i) {
            auto row = ordered_json::array();
            for (int j = 0; j < b->n; ++j) row.push_back(b->sigma(i, j));
            rows.push_back(row);
        }
        doc["sigma"] = rows;
        auto alpha = ordered_json::array();
        for (int i = 0; i < b->n; ++i) alpha.push_back(b->alpha(i));
        doc["alpha"] = alpha;
    } else {
        const auto& g = std::get<GridProfile>(p);
        doc["kind"] = "grid";
        doc["resolution"] = g.resolution;
        auto rows = ordered_json::array();
        for (int i = 0; i < g.resolution; ++i) {
            auto row = ordered_json::array();
            for (int j = 0; j < g.resolution; ++j) row.push_back(g.values(i, j));
            rows.push_back(row);
        }
        doc["values"] = rows;
    }
    return doc;
}

std::vector<double> parse_grid(const std::string& spec) {
    double a = 0.0, b = 0.0;
    long count = 0;
    char extra = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &a, &b, &count, &extra) != 3 || count < 1)
        throw ValidationError("grid spec '" + spec + "' is not start:stop:count");
    if (count == 1) {
        if (a != b) throw ValidationError("grid spec '" + spec + "': count 1 needs start == stop");
        return {a};
    }
    if (!(b > a)) throw ValidationError("grid spec '" + spec + "' must increase");
    return linspace(a, b, static_cast<std::size_t>(count));
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const CsvColumns& cols) {
    std::ofstream out(path);
    if (!out) throw ValidationError("io: cannot write '" + path + "'");
    std::size_t rows = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        out << (c ? "," : "") << cols[c].first;
        rows = std::max(rows, cols[c].second.size());
    }
    out << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ",";
            if (r < cols[c].second.size()) out << fmt17(cols[c].second[r]);
        }
        out << "\n";
    }
}

void write_json_file(const std::string& path, const ordered_json& doc) {
    std::ofstream out(path);
    if (!out) throw ValidationError("io: cannot write '" + path + "'");
    out << doc.dump(2) << "\n";
}

}  // namespace varprof
