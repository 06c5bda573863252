#include "batchlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace batchlab {

void RunConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (network.hidden.empty()) throw std::invalid_argument("network needs hidden widths");
    optimizer.validate();
    schedule.validate();
    if (discard) {
        if (!(discard->ratio >= 0.0 && discard->ratio < 1.0))
            throw std::invalid_argument("discard ratio must lie in [0, 1)");
    }
    if (dataset.kind == DatasetSpec::Kind::kTeacher) {
        if (dataset.n_classes < 2 || dataset.n_samples < dataset.n_classes)
            throw std::invalid_argument("dataset spec: need n_samples >= n_classes >= 2");
    } else if (dataset.csv_path.empty()) {
        throw std::invalid_argument("dataset spec: csv kind needs a path");
    }
}

void SweepConfig::validate() const {
    base.validate();
    if (batch_sizes.empty()) throw std::invalid_argument("sweep needs batch sizes");
    for (std::size_t i = 1; i < batch_sizes.size(); ++i)
        if (batch_sizes[i] <= batch_sizes[i - 1])
            throw std::invalid_argument("sweep batch sizes must be strictly increasing");
    if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
    if (measure_layer < 0) throw std::invalid_argument("measure_layer must be non-negative");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

class IniView {
  public:
    IniView(const IniData& ini, const std::string& section) {
        auto it = ini.find(section);
        if (it != ini.end()) kv_ = &it->second;
    }

    bool present() const { return kv_ != nullptr; }

    std::optional<std::string> get(const std::string& key) const {
        if (!kv_) return std::nullopt;
        auto it = kv_->find(key);
        if (it == kv_->end()) return std::nullopt;
        return it->second;
    }

    std::string get_str(const std::string& key, const std::string& dflt) const {
        auto v = get(key);
        return v ? *v : dflt;
    }
    double get_double(const std::string& key, double dflt) const {
        auto v = get(key);
        return v ? std::stod(*v) : dflt;
    }
    long get_long(const std::string& key, long dflt) const {
        auto v = get(key);
        return v ? std::stol(*v) : dflt;
    }

  private:
    const std::map<std::string, std::string>* kv_{nullptr};
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    return out;
}

}  // namespace

IniData parse_ini(const std::string& text) {
    IniData data;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(lineno) +
                                         ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            data[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        data[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return data;
}

IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ini(ss.str());
}

RunConfig run_config_from_ini(const IniData& ini) {
    RunConfig cfg;

    IniView ds(ini, "dataset");
    std::string kind = ds.get_str("kind", "teacher");
    if (kind == "teacher") {
        cfg.dataset.kind = DatasetSpec::Kind::kTeacher;
    } else if (kind == "csv") {
        cfg.dataset.kind = DatasetSpec::Kind::kCsv;
    } else {
        throw std::runtime_error("dataset kind must be teacher or csv, got: " + kind);
    }
    cfg.dataset.seed = static_cast<std::uint64_t>(ds.get_long("seed", 1));
    cfg.dataset.n_samples = static_cast<std::size_t>(ds.get_long("n_samples", 8192));
    cfg.dataset.input_dim = static_cast<std::size_t>(ds.get_long("input_dim", 1024));
    cfg.dataset.n_classes = static_cast<std::size_t>(ds.get_long("n_classes", 4));
    cfg.dataset.csv_path = ds.get_str("csv_path", "");

    IniView net(ini, "network");
    if (auto h = net.get("hidden")) {
        cfg.network.hidden.clear();
        for (const auto& w : split(*h, ','))
            cfg.network.hidden.push_back(static_cast<std::size_t>(std::stol(w)));
    }
    cfg.network.activation = activation_from_string(net.get_str("activation", "relu"));
    cfg.network.loss = loss_from_string(net.get_str("loss", "softmax_cross_entropy"));

    IniView opt(ini, "optimizer");
    cfg.optimizer.kind = optimizer_from_string(opt.get_str("kind", "sgd"));
    cfg.optimizer.gamma = opt.get_double("gamma", 0.01);
    cfg.optimizer.lr = opt.get_double("lr", 0.01);
    cfg.optimizer.weight_decay = opt.get_double("weight_decay", 0.0);
    cfg.optimizer.guard_eps = opt.get_double("guard_eps", 1e-12);
    cfg.optimizer.r_min = opt.get_double("r_min", 1e-3);
    cfg.optimizer.r_max = opt.get_double("r_max", 1e3);

    IniView sched(ini, "schedule");
    if (auto phases = sched.get("phases")) {
        cfg.schedule.phases.clear();
        // phase syntax: start:batch:lr, comma separated
        for (const auto& p : split(*phases, ',')) {
            auto parts = split(p, ':');
            if (parts.size() != 3)
                throw std::runtime_error("schedule phase must be start:batch:lr, got: " + p);
            SchedulePhase phase;
            phase.start_epoch = static_cast<int>(std::stol(parts[0]));
            phase.batch_size = static_cast<std::size_t>(std::stol(parts[1]));
            phase.lr = std::stod(parts[2]);
            cfg.schedule.phases.push_back(phase);
        }
    }

    IniView disc(ini, "discard");
    if (disc.present()) {
        DiscardPolicy pol;
        pol.ratio = disc.get_double("ratio", 0.0);
        pol.first_epoch = static_cast<int>(disc.get_long("first_epoch", 0));
        pol.last_epoch = static_cast<int>(disc.get_long("last_epoch", 0));
        cfg.discard = pol;
    }

    IniView run(ini, "run");
    cfg.epochs = static_cast<int>(run.get_long("epochs", 1));
    cfg.seed = static_cast<std::uint64_t>(run.get_long("seed", 1));
    cfg.output_dir = run.get_str("output_dir", "out");

    cfg.validate();
    return cfg;
}

SweepConfig sweep_config_from_ini(const IniData& ini) {
    SweepConfig cfg;
    cfg.base = run_config_from_ini(ini);
    IniView sw(ini, "sweep");
    if (auto bs = sw.get("batch_sizes")) {
        cfg.batch_sizes.clear();
        for (const auto& b : split(*bs, ','))
            cfg.batch_sizes.push_back(static_cast<std::size_t>(std::stol(b)));
    }
    std::string rule = sw.get_str("lr_rule", "fixed");
    if (rule == "fixed") {
        cfg.lr_rule = LrRule::kFixed;
    } else if (rule == "linear_in_n") {
        cfg.lr_rule = LrRule::kLinearInN;
    } else {
        throw std::runtime_error("lr_rule must be fixed or linear_in_n, got: " + rule);
    }
    cfg.repeats = static_cast<int>(sw.get_long("repeats", 1));
    cfg.measure_layer = static_cast<int>(sw.get_long("measure_layer", 0));
    cfg.validate();
    return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {
        {"kind", cfg.dataset.kind == DatasetSpec::Kind::kTeacher ? "teacher" : "csv"},
        {"seed", cfg.dataset.seed},
        {"n_samples", cfg.dataset.n_samples},
        {"input_dim", cfg.dataset.input_dim},
        {"n_classes", cfg.dataset.n_classes},
        {"csv_path", cfg.dataset.csv_path},
    };
    j["network"] = {
        {"hidden", cfg.network.hidden},
        {"activation", to_string(cfg.network.activation)},
        {"loss", to_string(cfg.network.loss)},
    };
    j["optimizer"] = {
        {"kind", to_string(cfg.optimizer.kind)},
        {"gamma", cfg.optimizer.gamma},
        {"lr", cfg.optimizer.lr},
        {"weight_decay", cfg.optimizer.weight_decay},
        {"guard_eps", cfg.optimizer.guard_eps},
        {"r_min", cfg.optimizer.r_min},
        {"r_max", cfg.optimizer.r_max},
    };
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : cfg.schedule.phases)
        phases.push_back({{"start_epoch", p.start_epoch},
                          {"batch_size", p.batch_size},
                          {"lr", p.lr}});
    j["schedule"] = {{"phases", phases}};
    if (cfg.discard) {
        j["discard"] = {{"ratio", cfg.discard->ratio},
                        {"first_epoch", cfg.discard->first_epoch},
                        {"last_epoch", cfg.discard->last_epoch}};
    }
    j["run"] = {{"epochs", cfg.epochs}, {"seed", cfg.seed}, {"output_dir", cfg.output_dir}};
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& in) {
    const nlohmann::json& j = in.contains("config") ? in.at("config") : in;
    RunConfig cfg;
    const auto& ds = j.at("dataset");
    cfg.dataset.kind = ds.at("kind").get<std::string>() == "teacher" ? DatasetSpec::Kind::kTeacher
                                                                     : DatasetSpec::Kind::kCsv;
    cfg.dataset.seed = ds.at("seed").get<std::uint64_t>();
    cfg.dataset.n_samples = ds.at("n_samples").get<std::size_t>();
    cfg.dataset.input_dim = ds.at("input_dim").get<std::size_t>();
    cfg.dataset.n_classes = ds.at("n_classes").get<std::size_t>();
    cfg.dataset.csv_path = ds.at("csv_path").get<std::string>();

    const auto& net = j.at("network");
    cfg.network.hidden = net.at("hidden").get<std::vector<std::size_t>>();
    cfg.network.activation = activation_from_string(net.at("activation").get<std::string>());
    cfg.network.loss = loss_from_string(net.at("loss").get<std::string>());

    const auto& opt = j.at("optimizer");
    cfg.optimizer.kind = optimizer_from_string(opt.at("kind").get<std::string>());
    cfg.optimizer.gamma = opt.at("gamma").get<double>();
    cfg.optimizer.lr = opt.at("lr").get<double>();
    cfg.optimizer.weight_decay = opt.at("weight_decay").get<double>();
    cfg.optimizer.guard_eps = opt.at("guard_eps").get<double>();
    cfg.optimizer.r_min = opt.at("r_min").get<double>();
    cfg.optimizer.r_max = opt.at("r_max").get<double>();

    cfg.schedule.phases.clear();
    for (const auto& p : j.at("schedule").at("phases")) {
        SchedulePhase phase;
        phase.start_epoch = p.at("start_epoch").get<int>();
        phase.batch_size = p.at("batch_size").get<std::size_t>();
        phase.lr = p.at("lr").get<double>();
        cfg.schedule.phases.push_back(phase);
    }

    if (j.contains("discard")) {
        DiscardPolicy pol;
        pol.ratio = j.at("discard").at("ratio").get<double>();
        pol.first_epoch = j.at("discard").at("first_epoch").get<int>();
        pol.last_epoch = j.at("discard").at("last_epoch").get<int>();
        cfg.discard = pol;
    }

    const auto& run = j.at("run");
    cfg.epochs = run.at("epochs").get<int>();
    cfg.seed = run.at("seed").get<std::uint64_t>();
    cfg.output_dir = run.at("output_dir").get<std::string>();

    cfg.validate();
    return cfg;
}

namespace {

bool looks_like_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    char c;
    while (in.get(c)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        return c == '{';
    }
    throw std::runtime_error("config file is empty: " + path);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    if (looks_like_json(path)) {
        std::ifstream in(path);
        nlohmann::json j;
        in >> j;
        return run_config_from_json(j);
    }
    return run_config_from_ini(parse_ini_file(path));
}

SweepConfig load_sweep_config(const std::string& path) {
    return sweep_config_from_ini(parse_ini_file(path));
}

}  // namespace batchlab
