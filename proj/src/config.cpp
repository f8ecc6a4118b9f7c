#include "twisim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "twisim/errors.hpp"

namespace twisim {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

using KeyMap = std::map<std::string, Entry>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::string_view source, int line, const std::string& msg) {
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(std::string_view source, const std::string& key, const Entry& e) {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        fail(source, e.line, "key '" + key + "' has non-numeric value '" + e.value + "'");
    return v;
}

long parse_int(std::string_view source, const std::string& key, const Entry& e) {
    const char* begin = e.value.c_str();
    char* end = nullptr;
    const long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0')
        fail(source, e.line, "key '" + key + "' has non-integer value '" + e.value + "'");
    return v;
}

bool parse_bool(std::string_view source, const std::string& key, const Entry& e) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    fail(source, e.line, "key '" + key + "' has non-boolean value '" + e.value + "'");
}

class Resolver {
public:
    Resolver(std::string_view source, KeyMap keys)
        : source_(source), keys_(std::move(keys)) {}

    bool take_double(const std::string& key, double& out, double scale = 1.0) {
        auto it = keys_.find(key);
        if (it == keys_.end()) return false;
        out = parse_double(source_, key, it->second) * scale;
        keys_.erase(it);
        return true;
    }

    bool take_optional(const std::string& key, std::optional<double>& out,
                       double scale = 1.0) {
        double v = 0.0;
        if (!take_double(key, v, scale)) return false;
        out = v;
        return true;
    }

    bool take_int(const std::string& key, int& out) {
        auto it = keys_.find(key);
        if (it == keys_.end()) return false;
        out = static_cast<int>(parse_int(source_, key, it->second));
        keys_.erase(it);
        return true;
    }

    bool take_bool(const std::string& key, bool& out) {
        auto it = keys_.find(key);
        if (it == keys_.end()) return false;
        out = parse_bool(source_, key, it->second);
        keys_.erase(it);
        return true;
    }

    // Time keys accept either an _s or an _ms form, not both.
    bool take_time(const std::string& stem, double& out) {
        const std::string key_s = stem + "_s";
        const std::string key_ms = stem + "_ms";
        const bool has_s = keys_.count(key_s) > 0;
        const bool has_ms = keys_.count(key_ms) > 0;
        if (has_s && has_ms)
            fail(source_, keys_.at(key_ms).line,
                 "keys '" + key_s + "' and '" + key_ms + "' both set");
        if (has_s) return take_double(key_s, out);
        if (has_ms) return take_double(key_ms, out, 1e-3);
        return false;
    }

    bool take_time_optional(const std::string& stem, std::optional<double>& out) {
        double v = 0.0;
        if (!take_time(stem, v)) return false;
        out = v;
        return true;
    }

    void reject_leftovers() const {
        if (keys_.empty()) return;
        // report the earliest offending line
        const Entry* first = nullptr;
        const std::string* key = nullptr;
        for (const auto& [k, e] : keys_) {
            if (!first || e.line < first->line) {
                first = &e;
                key = &k;
            }
        }
        fail(source_, first->line, "unknown key '" + *key + "'");
    }

    std::string_view source() const { return source_; }

private:
    std::string_view source_;
    KeyMap keys_;
};

KeyMap tokenize(std::string_view text, std::string_view source) {
    KeyMap keys;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(source, line_no, "expected 'key = value'");
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) fail(source, line_no, "empty key");
        if (value.empty()) fail(source, line_no, "key '" + key + "' has empty value");
        if (keys.count(key))
            fail(source, line_no, "duplicate key '" + key + "'");
        keys.emplace(key, Entry{value, line_no});
    }
    return keys;
}

// keys addressed to one sensor id ("*" collects the wildcard defaults)
KeyMap extract_sensor_keys(KeyMap& keys, const std::string& id) {
    KeyMap out;
    const std::string prefix = "sensor." + id + ".";
    for (auto it = keys.begin(); it != keys.end();) {
        if (it->first.rfind(prefix, 0) == 0) {
            out.emplace(it->first.substr(prefix.size()), it->second);
            it = keys.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

SensorLink resolve_sensor(std::string_view source, KeyMap own, const KeyMap& defaults) {
    KeyMap merged = defaults;
    for (auto& [k, e] : own) merged[k] = e; // sensor-specific overrides wildcard
    Resolver r(source, std::move(merged));
    SensorLink link;
    r.take_optional("power_w", link.tx_power_w);
    r.take_optional("beta", link.fading_gain);
    r.take_optional("gamma", link.gamma_override);
    r.take_bool("perfect_detection", link.perfect_detection);
    r.take_bool("perfect_transmission", link.perfect_transmission);
    r.reject_leftovers();
    return link;
}

bool has_snr_source(const SensorLink& l) {
    return l.gamma_override.has_value() ||
           (l.tx_power_w.has_value() && l.fading_gain.has_value());
}

} // namespace

ParsedConfig parse_config_text(std::string_view text, std::string_view source_name) {
    KeyMap keys = tokenize(text, source_name);

    // validate sensor key shape and collect ids before splitting
    std::vector<int> ids;
    for (const auto& [k, e] : keys) {
        if (k.rfind("sensor.", 0) != 0) continue;
        const auto rest = k.substr(7);
        const auto dot = rest.find('.');
        if (dot == std::string::npos)
            fail(source_name, e.line, "sensor key '" + k + "' needs sensor.<id>.<field>");
        const std::string id = rest.substr(0, dot);
        if (id == "*") continue;
        char* end = nullptr;
        const long n = std::strtol(id.c_str(), &end, 10);
        if (end == id.c_str() || *end != '\0' || n < 1)
            fail(source_name, e.line, "bad sensor id '" + id + "'");
        ids.push_back(static_cast<int>(n));
    }

    ParsedConfig cfg;
    const KeyMap wildcard = extract_sensor_keys(keys, "*");

    // scalar keys
    KeyMap scalar = keys;
    // remove per-sensor keys from the scalar map
    for (auto it = scalar.begin(); it != scalar.end();) {
        if (it->first.rfind("sensor.", 0) == 0)
            it = scalar.erase(it);
        else
            ++it;
    }
    Resolver res(source_name, std::move(scalar));
    res.take_time("t0", cfg.scenario.t0);
    res.take_double("v", cfg.scenario.v);
    res.take_double("d_max_m", cfg.scenario.d_max);
    res.take_int("sensors", cfg.scenario.sensor_count);
    res.take_time("c_min", cfg.scenario.c_min);
    res.take_time("c_max", cfg.scenario.c_max);
    res.take_bool("allow_equal_comp_bounds", cfg.scenario.allow_equal_comp_bounds);
    res.take_optional("bandwidth_hz", cfg.comm.bandwidth_hz);
    res.take_time("t_f", cfg.comm.frame_s);
    res.take_time_optional("t_p", cfg.comm.pt_subframe_s);
    res.take_optional("packet_bits", cfg.comm.packet_bits);
    res.take_optional("n0", cfg.comm.noise_density);
    res.take_int("m_max", cfg.comm.max_sr_attempts);
    res.take_int("n_max", cfg.comm.max_pt_attempts);
    res.take_int("preamble_length", cfg.comm.preamble_length);
    res.take_optional("gamma_th", cfg.comm.gamma_th_override);
    res.take_bool("serialize_grants", cfg.sim_flags.serialize_grants);
    res.reject_leftovers();

    for (int id : ids) {
        if (id > cfg.scenario.sensor_count)
            throw ConfigError(std::string(source_name) + ": sensor id " +
                              std::to_string(id) + " exceeds sensors=" +
                              std::to_string(cfg.scenario.sensor_count));
    }

    cfg.sensors.resize(static_cast<std::size_t>(cfg.scenario.sensor_count));
    for (int id = 1; id <= cfg.scenario.sensor_count; ++id) {
        KeyMap own = extract_sensor_keys(keys, std::to_string(id));
        cfg.sensors[static_cast<std::size_t>(id - 1)] =
            resolve_sensor(source_name, std::move(own), wildcard);
    }

    // Sensors with no SNR source inherit sensor 2's (captions pin gamma_2).
    if (cfg.scenario.sensor_count >= 2 && has_snr_source(cfg.sensors[1])) {
        const SensorLink second = cfg.sensors[1];
        for (auto& link : cfg.sensors) {
            if (has_snr_source(link)) continue;
            link.tx_power_w = second.tx_power_w;
            link.fading_gain = second.fading_gain;
            link.gamma_override = second.gamma_override;
        }
    }

    cfg.scenario.validate();
    cfg.comm.validate(cfg.scenario.sensor_count);
    return cfg;
}

ParsedConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.filename().string());
}

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void echo_resolved_config(std::ostream& out, const ParsedConfig& config) {
    const auto& s = config.scenario;
    const auto& c = config.comm;
    out << "# resolved configuration (SI units)\n";
    out << "t0_s = " << g17(s.t0) << "\n";
    out << "v = " << g17(s.v) << "\n";
    out << "d_max_m = " << g17(s.d_max) << "\n";
    out << "sensors = " << s.sensor_count << "\n";
    out << "c_min_s = " << g17(s.c_min) << "\n";
    out << "c_max_s = " << g17(s.c_max) << "\n";
    if (s.allow_equal_comp_bounds) out << "allow_equal_comp_bounds = true\n";
    out << "t_f_s = " << g17(c.frame_s) << "\n";
    if (c.bandwidth_hz) out << "bandwidth_hz = " << g17(*c.bandwidth_hz) << "\n";
    if (c.pt_subframe_s) out << "t_p_s = " << g17(*c.pt_subframe_s) << "\n";
    if (c.packet_bits) out << "packet_bits = " << g17(*c.packet_bits) << "\n";
    if (c.noise_density) out << "n0 = " << g17(*c.noise_density) << "\n";
    out << "m_max = " << c.max_sr_attempts << "\n";
    out << "n_max = " << c.max_pt_attempts << "\n";
    out << "preamble_length = " << c.preamble_length << "\n";
    if (c.gamma_th_override) out << "gamma_th = " << g17(*c.gamma_th_override) << "\n";
    if (config.sim_flags.serialize_grants) out << "serialize_grants = true\n";
    for (std::size_t i = 0; i < config.sensors.size(); ++i) {
        const auto& l = config.sensors[i];
        const std::string p = "sensor." + std::to_string(i + 1) + ".";
        if (l.gamma_override) out << p << "gamma = " << g17(*l.gamma_override) << "\n";
        if (l.tx_power_w) out << p << "power_w = " << g17(*l.tx_power_w) << "\n";
        if (l.fading_gain) out << p << "beta = " << g17(*l.fading_gain) << "\n";
        if (l.perfect_detection) out << p << "perfect_detection = true\n";
        if (l.perfect_transmission) out << p << "perfect_transmission = true\n";
    }
}

void write_config_echo(const std::filesystem::path& path, const ParsedConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config echo: " + path.string());
    echo_resolved_config(out, config);
    if (!out) throw IoError("failed writing config echo: " + path.string());
}

} // namespace twisim
