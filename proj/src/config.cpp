#include "griddispatch/config.hpp"

#include "griddispatch/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace griddispatch::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool needs_quotes(const std::string& v) {
    if (v.empty()) return true;
    if (v == "true" || v == "false") return false;
    char* end = nullptr;
    std::strtod(v.c_str(), &end);
    return end != v.c_str() + v.size();
}

} // namespace

Document Document::parse(const std::string& text) {
    Document doc;
    std::stringstream ss(text);
    std::string line;
    std::string current;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty())
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section name");
            if (doc.find_section(current) == nullptr) doc.sections_.push_back({current, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (current.empty())
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": key outside any [section]");
        doc.set(current, key, value);
    }
    return doc;
}

Document Document::load(const std::string& path) {
    try {
        return parse(csv::read_text(path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config '") + path + "': " + ex.what());
    }
}

std::string Document::serialize() const {
    std::string out;
    for (const auto& s : sections_) {
        out += "[" + s.name + "]\n";
        for (const auto& [k, v] : s.entries) {
            out += k + " = ";
            out += needs_quotes(v) ? "\"" + v + "\"" : v;
            out += "\n";
        }
        out += "\n";
    }
    return out;
}

Document::Section* Document::find_section(const std::string& name) {
    for (auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

const Document::Section* Document::find_section(const std::string& name) const {
    for (const auto& s : sections_)
        if (s.name == name) return &s;
    return nullptr;
}

bool Document::has(const std::string& section, const std::string& key) const {
    const auto* s = find_section(section);
    if (!s) return false;
    for (const auto& [k, v] : s->entries)
        if (k == key) return true;
    return false;
}

std::string Document::str(const std::string& section, const std::string& key) const {
    const auto* s = find_section(section);
    if (s)
        for (const auto& [k, v] : s->entries)
            if (k == key) return v;
    throw ConfigError("config: missing [" + section + "] " + key);
}

std::string Document::str_or(const std::string& section, const std::string& key,
                             const std::string& dflt) const {
    return has(section, key) ? str(section, key) : dflt;
}

double Document::num(const std::string& section, const std::string& key) const {
    const std::string v = str(section, key);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
        throw ConfigError("config: [" + section + "] " + key + " = '" + v + "' is not a number");
    return d;
}

double Document::num_or(const std::string& section, const std::string& key, double dflt) const {
    return has(section, key) ? num(section, key) : dflt;
}

long Document::int_or(const std::string& section, const std::string& key, long dflt) const {
    return has(section, key) ? static_cast<long>(num(section, key)) : dflt;
}

bool Document::flag_or(const std::string& section, const std::string& key, bool dflt) const {
    if (!has(section, key)) return dflt;
    const std::string v = str(section, key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: [" + section + "] " + key + " must be true or false");
}

void Document::set(const std::string& section, const std::string& key,
                   const std::string& value) {
    auto* s = find_section(section);
    if (!s) {
        sections_.push_back({section, {}});
        s = &sections_.back();
    }
    for (auto& [k, v] : s->entries)
        if (k == key) {
            v = value;
            return;
        }
    s->entries.emplace_back(key, value);
}

std::vector<std::string> Document::section_names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& s : sections_)
        if (s.name.rfind(prefix, 0) == 0) out.push_back(s.name);
    return out;
}

void Document::apply_env_overrides() {
    for (auto& s : sections_) {
        std::string sec_env = s.name;
        std::replace(sec_env.begin(), sec_env.end(), '.', '_');
        std::transform(sec_env.begin(), sec_env.end(), sec_env.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        for (auto& [k, v] : s.entries) {
            std::string key_env = k;
            std::transform(key_env.begin(), key_env.end(), key_env.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            const std::string name = "GRIDDISPATCH_" + sec_env + "_" + key_env;
            if (const char* val = std::getenv(name.c_str())) v = val;
        }
    }
}

const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::Csac: return "csac";
        case RunMode::CsacSqil: return "csac-sqil";
        case RunMode::Milp: return "milp";
    }
    return "?";
}

RunMode mode_from_string(const std::string& s) {
    if (s == "csac") return RunMode::Csac;
    if (s == "csac-sqil") return RunMode::CsacSqil;
    if (s == "milp") return RunMode::Milp;
    throw ConfigError("config: unknown mode '" + s + "' (expected csac, csac-sqil or milp)");
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (!cell.empty()) out.push_back(std::stoi(cell));
    }
    if (out.empty()) throw ConfigError("config: empty integer list '" + s + "'");
    return out;
}

std::string int_list_to_string(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace

RunConfig RunConfig::from_document(const Document& doc) {
    RunConfig rc;
    rc.mode = mode_from_string(doc.str_or("run", "mode", "csac-sqil"));
    rc.feeder_path = doc.str("feeder", "path");
    rc.out_dir = doc.str_or("run", "out_dir", "out");
    rc.threads = static_cast<int>(doc.int_or("run", "threads", 1));
    rc.seed = static_cast<std::uint64_t>(doc.int_or("run", "seed", 1));

    rc.scenario_path = doc.str_or("scenario", "path", "");
    rc.scenario_seed = static_cast<std::uint64_t>(doc.int_or("scenario", "seed", 7));
    rc.scenario_count = static_cast<int>(doc.int_or("scenario", "count", 4));
    rc.scenario_steps = static_cast<int>(doc.int_or("scenario", "steps", 2000));
    rc.step_seconds = doc.num_or("scenario", "step_seconds", 4.0);
    rc.eval_scenario_seed = static_cast<std::uint64_t>(doc.int_or("scenario", "eval_seed", 1009));
    rc.eval_scenario_count = static_cast<int>(doc.int_or("scenario", "eval_count", 3));

    rc.account.capacity_kw = doc.num_or("market", "capacity_kw", 15.0);
    rc.account.capacity_cap_kw = doc.num_or("market", "capacity_cap_kw", 50.0);
    rc.account.rho_min = doc.num_or("market", "rho_min", 0.4);
    rc.account.epsilon_kw =
        doc.num_or("market", "epsilon_kw", 0.02 * rc.account.capacity_kw);
    rc.account.perf_prev = doc.num_or("market", "perf_prev", 1.0);
    rc.account.aging_cost_per_kwh = doc.num_or("market", "aging_cost", 0.05);
    rc.account.validate();

    rc.episode_initial_soc = doc.num_or("env", "initial_soc", 0.5);
    rc.episode_steps = static_cast<int>(doc.int_or("env", "episode_steps", 450));

    const auto battery_sections = doc.section_names_with_prefix("battery.");
    if (battery_sections.empty()) throw ConfigError("config: no [battery.*] sections");
    for (const auto& sec : battery_sections) {
        bess::BatterySpec b;
        b.id = doc.str_or(sec, "id", sec.substr(std::string("battery.").size()));
        b.node = doc.str(sec, "node");
        const std::string ph = doc.str_or(sec, "phase", "a");
        if (ph.size() != 1) throw ConfigError("config: [" + sec + "] phase must be a single letter");
        b.phase = ph[0];
        b.power_kw = doc.num_or(sec, "power_kw", 10.0);
        b.energy_kwh = doc.num_or(sec, "energy_kwh", 4.21);
        b.efficiency = doc.num_or(sec, "efficiency", 0.9);
        b.soc_min = doc.num_or(sec, "soc_min", 0.1);
        b.soc_max = doc.num_or(sec, "soc_max", 0.9);
        b.priority = doc.num_or(sec, "priority", 1.0);
        b.available = doc.flag_or(sec, "available", true);
        b.energy_budget_kwh = doc.num_or(sec, "energy_budget_kwh", -1.0);
        b.validate();
        rc.fleet.push_back(std::move(b));
    }

    auto& t = rc.train;
    t.episodes = static_cast<int>(doc.int_or("train", "episodes", 200));
    t.train_every = static_cast<int>(doc.int_or("train", "train_every", 2));
    t.updates_per_round = static_cast<int>(doc.int_or("train", "updates_per_round", 1));
    t.warmup = static_cast<std::size_t>(doc.int_or("train", "warmup", 500));
    t.buffer_capacity = static_cast<std::size_t>(doc.int_or("train", "buffer", 100000));
    t.eval_every = static_cast<int>(doc.int_or("train", "eval_every", 10));
    t.eval_episodes_per_scenario =
        static_cast<int>(doc.int_or("train", "eval_episodes_per_scenario", 1));
    t.reward_scale = doc.num_or("env", "reward_scale", 0.1);
    t.param_noise = doc.num_or("agent", "param_noise", 0.05);
    t.seed = rc.seed;
    t.sqil = rc.mode == RunMode::CsacSqil;

    auto& a = t.agent;
    a.hidden = parse_int_list(doc.str_or("agent", "hidden", "64,32"));
    a.gamma = doc.num_or("agent", "gamma", 0.99);
    a.lr = doc.num_or("agent", "lr", 0.001);
    a.lr_lambda = doc.num_or("agent", "lr_lambda", 0.005);
    a.tau = doc.num_or("agent", "tau", 0.005);
    a.alpha = doc.num_or("agent", "alpha", 0.1);
    a.alpha_auto = doc.flag_or("agent", "alpha_auto", false);
    a.cost_limit = doc.num_or("agent", "cost_limit", 0.0);
    a.batch_size = static_cast<std::size_t>(doc.int_or("agent", "batch_size", 256));
    a.episode_steps = rc.episode_steps;
    a.init_seed = rc.seed;

    rc.demo_path = doc.str_or("train", "demo_path", "");
    rc.demo_episodes_per_scenario =
        static_cast<int>(doc.int_or("train", "demo_episodes_per_scenario", 2));
    return rc;
}

Document RunConfig::to_document() const {
    Document d;
    d.set("run", "mode", mode_name(mode));
    d.set("run", "out_dir", out_dir);
    d.set("run", "threads", std::to_string(threads));
    d.set("run", "seed", std::to_string(seed));
    d.set("feeder", "path", feeder_path);
    if (!scenario_path.empty()) d.set("scenario", "path", scenario_path);
    d.set("scenario", "seed", std::to_string(scenario_seed));
    d.set("scenario", "count", std::to_string(scenario_count));
    d.set("scenario", "steps", std::to_string(scenario_steps));
    d.set("scenario", "step_seconds", csv::format_num(step_seconds));
    d.set("scenario", "eval_seed", std::to_string(eval_scenario_seed));
    d.set("scenario", "eval_count", std::to_string(eval_scenario_count));
    d.set("market", "capacity_kw", csv::format_num(account.capacity_kw));
    d.set("market", "capacity_cap_kw", csv::format_num(account.capacity_cap_kw));
    d.set("market", "rho_min", csv::format_num(account.rho_min));
    d.set("market", "epsilon_kw", csv::format_num(account.epsilon_kw));
    d.set("market", "perf_prev", csv::format_num(account.perf_prev));
    d.set("market", "aging_cost", csv::format_num(account.aging_cost_per_kwh));
    d.set("env", "initial_soc", csv::format_num(episode_initial_soc));
    d.set("env", "episode_steps", std::to_string(episode_steps));
    d.set("env", "reward_scale", csv::format_num(train.reward_scale));
    d.set("agent", "hidden", int_list_to_string(train.agent.hidden));
    d.set("agent", "gamma", csv::format_num(train.agent.gamma));
    d.set("agent", "lr", csv::format_num(train.agent.lr));
    d.set("agent", "lr_lambda", csv::format_num(train.agent.lr_lambda));
    d.set("agent", "tau", csv::format_num(train.agent.tau));
    d.set("agent", "alpha", csv::format_num(train.agent.alpha));
    d.set("agent", "alpha_auto", train.agent.alpha_auto ? "true" : "false");
    d.set("agent", "cost_limit", csv::format_num(train.agent.cost_limit));
    d.set("agent", "batch_size", std::to_string(train.agent.batch_size));
    d.set("agent", "param_noise", csv::format_num(train.param_noise));
    d.set("train", "episodes", std::to_string(train.episodes));
    d.set("train", "train_every", std::to_string(train.train_every));
    d.set("train", "updates_per_round", std::to_string(train.updates_per_round));
    d.set("train", "warmup", std::to_string(train.warmup));
    d.set("train", "buffer", std::to_string(train.buffer_capacity));
    d.set("train", "eval_every", std::to_string(train.eval_every));
    d.set("train", "eval_episodes_per_scenario",
          std::to_string(train.eval_episodes_per_scenario));
    if (!demo_path.empty()) d.set("train", "demo_path", demo_path);
    d.set("train", "demo_episodes_per_scenario", std::to_string(demo_episodes_per_scenario));
    for (const auto& b : fleet) {
        const std::string sec = "battery." + b.id;
        d.set(sec, "id", b.id);
        d.set(sec, "node", b.node);
        d.set(sec, "phase", std::string(1, b.phase));
        d.set(sec, "power_kw", csv::format_num(b.power_kw));
        d.set(sec, "energy_kwh", csv::format_num(b.energy_kwh));
        d.set(sec, "efficiency", csv::format_num(b.efficiency));
        d.set(sec, "soc_min", csv::format_num(b.soc_min));
        d.set(sec, "soc_max", csv::format_num(b.soc_max));
        d.set(sec, "priority", csv::format_num(b.priority));
        d.set(sec, "available", b.available ? "true" : "false");
        d.set(sec, "energy_budget_kwh", csv::format_num(b.energy_budget_kwh));
    }
    return d;
}

std::uint64_t RunConfig::hash() const {
    // execution details do not change what an agent was trained on
    Document d = to_document();
    d.set("run", "out_dir", "-");
    d.set("run", "threads", "0");
    const std::string s = d.serialize();
    return fnv1a(s.data(), s.size());
}

grid::Feeder RunConfig::load_feeder() const {
    return grid::load_feeder_json(feeder_path);
}

env::EnvConfig RunConfig::make_env_config(const grid::Feeder& feeder) const {
    env::EnvConfig ec;
    ec.feeder = feeder;
    ec.fleet = fleet;
    ec.account = account;
    ec.initial_soc_frac = episode_initial_soc;
    ec.episode_steps = episode_steps;
    return ec;
}

std::vector<market::RegulationScenario> RunConfig::make_train_scenarios() const {
    std::vector<market::RegulationScenario> out;
    if (!scenario_path.empty()) {
        out.push_back(market::load_scenario(scenario_path));
        return out;
    }
    for (int i = 0; i < scenario_count; ++i)
        out.push_back(market::synthesize_scenario(scenario_seed + static_cast<std::uint64_t>(i),
                                                  static_cast<std::size_t>(scenario_steps),
                                                  step_seconds));
    return out;
}

std::vector<market::RegulationScenario> RunConfig::make_eval_scenarios() const {
    std::vector<market::RegulationScenario> out;
    for (int i = 0; i < eval_scenario_count; ++i)
        out.push_back(market::synthesize_scenario(
            eval_scenario_seed + static_cast<std::uint64_t>(i),
            static_cast<std::size_t>(scenario_steps), step_seconds));
    return out;
}

} // namespace griddispatch::config
