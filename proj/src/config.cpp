#include "uda/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "uda/errors.hpp"

namespace uda {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key, "cannot parse '" + text + "'");
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

struct Field {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T, typename Member>
Field number(std::string key, Member member) {
    return Field{key,
                 [member](const RunConfig& c) {
                     const T v = member(c);
                     if constexpr (std::is_floating_point_v<T>) {
                         return format_double(v);
                     } else {
                         return std::to_string(v);
                     }
                 },
                 [member, key](RunConfig& c, const std::string& s) { member(c) = parse_value<T>(key, s); }};
}

#define UDA_NUM(T, key, expr) number<T>(key, [](auto& c) -> auto& { return expr; })

template <typename E, typename Member>
Field choice(std::string key, Member member, std::vector<std::pair<std::string, E>> names) {
    return Field{key,
                 [member, names](const RunConfig& c) {
                     const E v = member(c);
                     for (const auto& [n, e] : names)
                         if (e == v) return n;
                     return std::string("?");
                 },
                 [member, names, key](RunConfig& c, const std::string& s) {
                     for (const auto& [n, e] : names) {
                         if (n == s) {
                             member(c) = e;
                             return;
                         }
                     }
                     std::string allowed;
                     for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : ", ") + n;
                     throw ConfigError(key, "unknown value '" + s + "' (expected one of " + allowed + ")");
                 }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(UDA_NUM(std::uint64_t, "seed", c.seed));
        f.push_back(choice<PolicyKind>("schedule.kind", [](auto& c) -> auto& { return c.train.schedule.kind; },
                                       {{"two_stage", PolicyKind::two_stage},
                                        {"k_step", PolicyKind::k_step},
                                        {"linear", PolicyKind::linear},
                                        {"static", PolicyKind::static_weights}}));
        f.push_back(UDA_NUM(int, "schedule.k", c.train.schedule.k));
        f.push_back(UDA_NUM(int, "schedule.e1", c.train.schedule.e1));
        f.push_back(UDA_NUM(int, "schedule.e2", c.train.schedule.e2));
        f.push_back(UDA_NUM(int, "schedule.e3", c.train.schedule.e3));
        f.push_back(UDA_NUM(double, "schedule.lambda_s", c.train.schedule.static_source));
        f.push_back(UDA_NUM(double, "schedule.lambda_t", c.train.schedule.static_target));
        f.push_back(UDA_NUM(double, "loss.delta", c.train.delta));
        f.push_back(UDA_NUM(double, "loss.gamma", c.train.gamma));
        f.push_back(UDA_NUM(double, "loss.tau", c.train.tau));
        f.push_back(UDA_NUM(double, "loss.margin", c.train.margin));
        f.push_back(choice<CclDenominator>(
            "loss.ccl_denominator", [](auto& c) -> auto& { return c.train.ccl_denominator; },
            {{"with_positive", CclDenominator::with_positive}, {"negatives_only", CclDenominator::negatives_only}}));
        f.push_back(choice<CclPairs>("loss.ccl_pairs", [](auto& c) -> auto& { return c.train.ccl_pairs; },
                                     {{"cluster", CclPairs::cluster},
                                      {"instance", CclPairs::instance},
                                      {"off", CclPairs::off}}));
        f.push_back(UDA_NUM(double, "loss.instance_noise", c.train.instance_noise));
        f.push_back(UDA_NUM(double, "memory.momentum", c.train.momentum));
        f.push_back(UDA_NUM(std::size_t, "memory.queue_capacity", c.train.queue_capacity));
        f.push_back(UDA_NUM(double, "dbscan.eps", c.train.dbscan.eps));
        f.push_back(UDA_NUM(int, "dbscan.min_pts", c.train.dbscan.min_pts));
        f.push_back(UDA_NUM(double, "train.learning_rate", c.train.learning_rate));
        f.push_back(UDA_NUM(int, "train.P", c.train.P));
        f.push_back(UDA_NUM(int, "train.K", c.train.K));
        f.push_back(UDA_NUM(int, "train.epochs_per_cluster_round", c.train.epochs_per_cluster_round));
        f.push_back(UDA_NUM(int, "train.steps_per_epoch", c.train.steps_per_epoch));
        f.push_back(choice<Optimizer>("train.optimizer", [](auto& c) -> auto& { return c.train.optimizer; },
                                      {{"sgd", Optimizer::sgd}, {"adam", Optimizer::adam}}));
        f.push_back(UDA_NUM(double, "train.adam_beta1", c.train.adam_beta1));
        f.push_back(UDA_NUM(double, "train.adam_beta2", c.train.adam_beta2));
        f.push_back(UDA_NUM(double, "train.weight_decay", c.train.weight_decay));
        f.push_back(UDA_NUM(std::size_t, "model.hidden_width", c.train.hidden_width));
        f.push_back(UDA_NUM(std::size_t, "model.feature_dim", c.train.feature_dim));
        f.push_back(UDA_NUM(int, "data.num_classes", c.data.num_classes));
        f.push_back(UDA_NUM(int, "data.samples_per_class", c.data.samples_per_class));
        f.push_back(UDA_NUM(int, "data.eval_samples_per_class", c.data.eval_samples_per_class));
        f.push_back(UDA_NUM(int, "data.input_dim", c.data.input_dim));
        f.push_back(UDA_NUM(double, "data.sigma_between", c.data.sigma_between));
        f.push_back(UDA_NUM(double, "data.sigma_within", c.data.sigma_within));
        f.push_back(UDA_NUM(int, "data.cameras", c.data.cameras_per_domain));
        f.push_back(UDA_NUM(double, "data.rotation_deg", c.data.shift.rotation_deg));
        f.push_back(UDA_NUM(double, "data.translation_norm", c.data.shift.translation_norm));
        f.push_back(UDA_NUM(double, "data.scale_min", c.data.shift.scale_min));
        f.push_back(UDA_NUM(double, "data.scale_max", c.data.shift.scale_max));
        f.push_back(Field{"data.shared_centers",
                          [](const RunConfig& c) { return std::string(c.data.shared_centers ? "true" : "false"); },
                          [](RunConfig& c, const std::string& s) {
                              c.data.shared_centers = parse_bool("data.shared_centers", s);
                          }});
        return f;
    }();
    return table;
}

#undef UDA_NUM

}  // namespace

ConfigEntries parse_config(const std::string& text) {
    ConfigEntries out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (!out.emplace(key, value).second) throw ParseError(line_no, "duplicate key '" + key + "'");
    }
    return out;
}

ConfigEntries load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ConfigEntries& entries) {
    std::string out;
    for (const std::string& key : config_keys()) {
        const auto it = entries.find(key);
        if (it != entries.end()) out += key + " = " + it->second + "\n";
    }
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const Field& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

RunConfig apply_config(RunConfig base, const ConfigEntries& entries) {
    for (const auto& [key, value] : entries) {
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw ConfigError(key, "unknown key");
        it->set(base, value);
    }
    base.train.seed = base.seed;
    base.data.seed = base.seed;
    base.train.validate();
    try {
        base.data.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("data", e.what());
    }
    return base;
}

ConfigEntries to_entries(const RunConfig& config) {
    ConfigEntries out;
    for (const Field& f : fields()) out[f.key] = f.get(config);
    return out;
}

}  // namespace uda
