#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "znib/error.hpp"
#include "znib/model.hpp"

namespace znib {

namespace {

std::vector<std::string> split_record(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw DataError("cannot parse '" + s + "' in column '" + column + "' as a number", row);
    }
    return v;
}

int parse_count(const std::string& s, const std::string& column, std::size_t row) {
    const double v = parse_number(s, column, row);
    if (v != std::floor(v) || v < 0 || v > 1e9) {
        throw DataError("column '" + column + "' needs a nonnegative integer, got '" + s + "'", row);
    }
    return static_cast<int>(v);
}

struct Token {
    std::string source;
    int power = 1;
};

Token parse_token(const std::string& tok) {
    const auto caret = tok.find('^');
    if (caret == std::string::npos) return {tok, 1};
    Token t{tok.substr(0, caret), 0};
    const std::string exp = tok.substr(caret + 1);
    const auto [ptr, ec] = std::from_chars(exp.data(), exp.data() + exp.size(), t.power);
    if (t.source.empty() || ec != std::errc() || ptr != exp.data() + exp.size() || t.power < 1) {
        throw ValidationError("bad covariate token '" + tok + "'");
    }
    return t;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvColumns& roles) {
    if (roles.y.empty()) throw ValidationError("csv: the y column must be named");
    if (roles.n.empty() && !roles.n_constant) throw ValidationError("csv: need an n column or a constant n");
    if (roles.n_constant && *roles.n_constant < 0) throw ValidationError("csv: constant n must be nonnegative");

    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: empty input, no header row");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_record(line, roles.delimiter);
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < header.size(); ++j) index.emplace(header[j], j);
    auto require = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) throw DataError("csv: missing column '" + name + "'");
        return it->second;
    };

    const std::size_t iy = require(roles.y);
    const std::size_t in_ = roles.n.empty() ? 0 : require(roles.n);
    const std::size_t im = roles.multiplicity.empty() ? 0 : require(roles.multiplicity);

    std::vector<Token> tokens;
    std::vector<std::string> raw_names;
    std::map<std::string, std::size_t> raw_slot;
    for (const auto& tok : roles.covariates) {
        if (tok == "1") {
            tokens.push_back({"1", 0});
            continue;
        }
        Token t = parse_token(tok);
        require(t.source);
        if (!raw_slot.count(t.source)) {
            raw_slot[t.source] = raw_names.size();
            raw_names.push_back(t.source);
        }
        tokens.push_back(t);
    }

    Dataset d;
    std::vector<std::vector<double>> raw(raw_names.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ++row;
        const auto f = split_record(line, roles.delimiter);
        if (f.size() != header.size()) {
            throw DataError("csv: expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()), row);
        }
        const int y = parse_count(f[iy], roles.y, row);
        const int n = roles.n.empty() ? *roles.n_constant : parse_count(f[in_], roles.n, row);
        if (y > n) throw DataError("csv: y=" + std::to_string(y) + " exceeds n=" + std::to_string(n), row);
        double m = 1.0;
        if (!roles.multiplicity.empty()) {
            m = parse_number(f[im], roles.multiplicity, row);
            if (m < 0) throw DataError("csv: negative multiplicity", row);
            if (m == 0) continue;
        }
        d.y.push_back(y);
        d.n.push_back(n);
        if (!roles.multiplicity.empty()) d.multiplicity.push_back(m);
        for (std::size_t j = 0; j < raw_names.size(); ++j) {
            raw[j].push_back(parse_number(f[index.at(raw_names[j])], raw_names[j], row));
        }
    }
    if (d.y.empty()) throw DataError("csv: dataset is empty");

    Dataset staging;
    staging.y = d.y;
    staging.n = d.n;
    staging.X.resize(static_cast<Eigen::Index>(d.y.size()), 0);
    for (std::size_t j = 0; j < raw_names.size(); ++j) staging.add_column(raw_names[j], raw[j]);
    if (roles.standardize) standardize(staging, raw_names);

    d.X.resize(static_cast<Eigen::Index>(d.y.size()), 0);
    for (const auto& t : tokens) {
        if (t.source == "1") {
            d.add_intercept();
            continue;
        }
        const auto src = staging.X.col(static_cast<Eigen::Index>(raw_slot.at(t.source)));
        std::vector<double> values(d.y.size());
        for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::pow(src[static_cast<Eigen::Index>(i)], t.power);
        const std::string name = t.power == 1 ? t.source : t.source + "^" + std::to_string(t.power);
        d.add_column(name, values);
        d.columns.back().source = t.source;
        d.columns.back().power = t.power;
    }
    d.validate();
    return d;
}

Dataset load_csv(const std::string& path, const CsvColumns& roles) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    return parse_csv(in, roles);
}

}  // namespace znib
