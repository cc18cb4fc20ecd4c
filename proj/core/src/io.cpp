#include "certdp/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "certdp/errors.hpp"

namespace certdp::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(where + ": '" + s + "' is not a number");
    }
    return x;
}

long long parse_int(const std::string& s, const std::string& where) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(where + ": '" + s + "' is not an integer");
    }
    return x;
}

template <class T>
T get(const nlohmann::json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw IoError("could not format a double");
    return {buf, ptr};
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

nlohmann::json to_json(const ModelSpec& spec) {
    nlohmann::json j{
        {"kind", to_string(spec.kind)},
        {"beta", spec.beta},
        {"theta", spec.theta},
        {"gamma", spec.gamma},
        {"state_lo", spec.state_lo},
        {"state_hi", spec.state_hi},
        {"n_choices", spec.n_choices},
    };
    if (spec.kind == ModelKind::FiniteSurrogate) j["surrogate_states"] = spec.surrogate_states;
    return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    const std::string where = "model";
    check_keys(j, {"kind", "beta", "theta", "gamma", "state_lo", "state_hi", "n_choices", "surrogate_states"}, where);
    ModelSpec spec;
    try {
        if (j.contains("kind")) spec.kind = model_kind_from_string(get<std::string>(j, "kind", where));
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("model.kind: ") + e.what());
    }
    if (j.contains("beta")) spec.beta = get<double>(j, "beta", where);
    if (j.contains("theta")) spec.theta = get<std::vector<double>>(j, "theta", where);
    if (j.contains("gamma")) {
        const auto g = get<std::vector<double>>(j, "gamma", where);
        if (g.size() != 3) throw ConfigError("model.gamma must have three entries");
        spec.gamma = {g[0], g[1], g[2]};
    }
    if (j.contains("state_lo")) spec.state_lo = get<double>(j, "state_lo", where);
    if (j.contains("state_hi")) spec.state_hi = get<double>(j, "state_hi", where);
    if (j.contains("n_choices")) spec.n_choices = get<int>(j, "n_choices", where);
    if (j.contains("surrogate_states")) spec.surrogate_states = get<std::size_t>(j, "surrogate_states", where);
    return spec;
}

nlohmann::json to_json(const BoundCertificate& cert) {
    return {
        {"delta_sup", cert.delta_sup},
        {"b_bar", cert.b_bar},
        {"B_upper", cert.B_upper},
        {"B_lower", cert.B_lower},
        {"method", to_string(cert.method)},
    };
}

BoundCertificate certificate_from_json(const nlohmann::json& j) {
    const std::string where = "certificate";
    check_keys(j, {"delta_sup", "b_bar", "B_upper", "B_lower", "method"}, where);
    BoundCertificate c;
    c.delta_sup = get<double>(j, "delta_sup", where);
    c.b_bar = get<double>(j, "b_bar", where);
    c.B_upper = get<double>(j, "B_upper", where);
    c.B_lower = get<double>(j, "B_lower", where);
    c.method = bound_method_from_string(get<std::string>(j, "method", where));
    c.validate();
    return c;
}

nlohmann::json to_json(const SolveReport& report) {
    return {{"iterations", report.iterations}, {"final_delta", report.final_delta}, {"deltas", report.deltas}};
}

std::string value_table_csv(const ValueTable& vtab) {
    std::string out = "state,choice,value\n";
    for (int d = 0; d < vtab.n_choices(); ++d) {
        for (std::size_t k = 0; k < vtab.n_knots(); ++k) {
            out += format_double(vtab.knots()[k]) + ',' + std::to_string(d) + ',' + format_double(vtab.at(k, d)) + '\n';
        }
    }
    return out;
}

ValueTable parse_value_table_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"state", "choice", "value"}) {
        throw ConfigError(origin + ": expected header 'state,choice,value'");
    }
    std::vector<std::vector<std::pair<double, double>>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line, ',');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (f.size() != 3) throw ConfigError(where + ": expected 3 fields");
        const long long d = parse_int(f[1], where);
        if (d < 0 || d > 64) throw ConfigError(where + ": choice out of range");
        if (rows.size() <= static_cast<std::size_t>(d)) rows.resize(d + 1);
        rows[d].push_back({parse_double(f[0], where), parse_double(f[2], where)});
    }
    if (rows.empty()) throw ConfigError(origin + ": value table has no rows");
    std::vector<double> knots;
    for (const auto& [s, v] : rows[0]) knots.push_back(s);
    std::vector<double> values;
    for (std::size_t d = 0; d < rows.size(); ++d) {
        if (rows[d].size() != knots.size()) throw ConfigError(origin + ": every choice needs the same knots");
        for (std::size_t k = 0; k < knots.size(); ++k) {
            if (rows[d][k].first != knots[k]) throw ConfigError(origin + ": every choice needs the same knots");
            values.push_back(rows[d][k].second);
        }
    }
    try {
        return ValueTable(std::move(knots), static_cast<int>(rows.size()), std::move(values));
    } catch (const ContractViolation& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

std::string panel_csv(const Panel& panel) {
    std::string out = "t,state,choice\n";
    for (std::size_t t = 0; t < panel.obs.size(); ++t) {
        out += std::to_string(t + 1) + ',' + format_double(panel.obs[t].state) + ',' +
               std::to_string(panel.obs[t].choice) + '\n';
    }
    return out;
}

Panel parse_panel_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"t", "state", "choice"}) {
        throw ConfigError(origin + ": expected header 't,state,choice'");
    }
    Panel panel;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line, ',');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (f.size() != 3) throw ConfigError(where + ": expected 3 fields");
        parse_int(f[0], where);
        const long long d = parse_int(f[2], where);
        if (d < 0 || d > 1'000'000) throw ConfigError(where + ": choice out of range");
        panel.obs.push_back({parse_double(f[1], where), static_cast<int>(d)});
    }
    return panel;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("error while writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
    }
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace certdp::io
