#include "unload/config_file.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unload {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<int> parse_int_list(const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("bad section header at line " +
                                            std::to_string(line_no));
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        entries[section.empty() ? key : section + "." + key] = value;
    }
    return entries;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_config(TrainConfig& config, const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) {
        if (key == "env.columns") config.env.columns = std::stoi(value);
        else if (key == "env.rows") config.env.rows = std::stoi(value);
        else if (key == "env.parcel_edge") config.env.parcel_edge = std::stod(value);
        else if (key == "env.obs_resolution") config.env.obs_resolution = std::stoi(value);
        else if (key == "env.collapse_mode") {
            if (value == "deterministic") config.env.collapse_mode = CollapseMode::Deterministic;
            else if (value == "stochastic") config.env.collapse_mode = CollapseMode::Stochastic;
            else throw std::invalid_argument("collapse_mode must be deterministic|stochastic");
        }
        else if (key == "env.p_out") config.env.p_out = std::stod(value);
        else if (key == "env.color_jitter") config.env.color_jitter = std::stod(value);
        else if (key == "env.seed") config.env.seed = std::stoull(value);
        else if (key == "train.total_steps") config.total_steps = std::stoi(value);
        else if (key == "train.zeta") config.zeta = std::stod(value);
        else if (key == "train.batch_size") config.batch_size = std::stoi(value);
        else if (key == "train.learning_rate") config.learning_rate = std::stod(value);
        else if (key == "train.gamma") config.gamma = std::stod(value);
        else if (key == "train.epsilon") config.epsilon = std::stod(value);
        else if (key == "train.lambda") config.lambda = std::stod(value);
        else if (key == "train.bias") config.bias = std::stod(value);
        else if (key == "train.softmax_temperature") config.softmax_temperature = std::stod(value);
        else if (key == "train.eval_every_episodes") config.eval_every_episodes = std::stoi(value);
        else if (key == "train.eval_episodes") config.eval_episodes = std::stoi(value);
        else if (key == "train.replay_capacity") config.replay_capacity = std::stoull(value);
        else if (key == "train.variant") config.variant = parse_variant(value);
        else if (key == "train.force_mask_in_eval") config.force_mask_in_eval = value == "true";
        else if (key == "net.hidden_sizes") config.hidden_sizes = parse_int_list(value);
        else if (key == "net.num_critics") config.num_critics = std::stoi(value);
        else throw std::invalid_argument("unknown config key: " + key);
    }
}

TrainConfig train_config_from_file(const std::string& path) {
    TrainConfig config;
    apply_config(config, load_config_file(path));
    return config;
}

}  // namespace unload
