#include "qsr/config.hpp"

#include <fstream>
#include <sstream>

namespace qsr {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double_field(const std::string& field, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value '" + value + "' for " + field);
    }
}

std::uint64_t parse_u64_field(const std::string& field, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad unsigned value '" + value + "' for " + field);
    }
}

int parse_int_field(const std::string& field, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value '" + value + "' for " + field);
    }
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    Section* current = nullptr;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError("config: malformed section header at " + origin + ":" +
                                  std::to_string(line_no));
            }
            cfg.sections_.push_back({trim(line.substr(1, line.size() - 2)), {}});
            current = &cfg.sections_.back();
            continue;
        }
        if (!current) {
            throw ConfigError("config: entry before any [section] at " + origin + ":" +
                              std::to_string(line_no));
        }

        KvPairs pairs;
        std::istringstream tokens(line);
        std::string token;
        while (tokens >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError("config: expected key=value, got '" + token + "' at " +
                                  origin + ":" + std::to_string(line_no));
            }
            pairs.emplace_back(token.substr(0, eq), token.substr(eq + 1));
        }
        current->lines.push_back(std::move(pairs));
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

const Config::Section* Config::find_section(const std::string& name) const {
    for (const auto& s : sections_) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

bool Config::has_section(const std::string& section) const {
    return find_section(section) != nullptr;
}

std::optional<std::string> Config::find(const std::string& section,
                                        const std::string& key) const {
    const Section* s = find_section(section);
    if (!s) return std::nullopt;
    for (const auto& line : s->lines) {
        if (line.size() == 1 && line.front().first == key) return line.front().second;
    }
    return std::nullopt;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return find(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const auto v = find(section, key);
    return v ? parse_double_field(section + "." + key, *v) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
    const auto v = find(section, key);
    return v ? parse_int_field(section + "." + key, *v) : fallback;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    const auto v = find(section, key);
    return v ? parse_u64_field(section + "." + key, *v) : fallback;
}

std::vector<KvPairs> Config::entries(const std::string& section,
                                     const std::string& head_key) const {
    std::vector<KvPairs> out;
    const Section* s = find_section(section);
    if (!s) return out;
    for (const auto& line : s->lines) {
        if (!line.empty() && line.front().first == head_key) out.push_back(line);
    }
    return out;
}

GuideSubset parse_guide_subset(const std::string& token) {
    if (token == "both") return GuideSubset::Both;
    if (token == "t1w") return GuideSubset::T1w;
    if (token == "t2w") return GuideSubset::T2w;
    if (token == "none") return GuideSubset::None;
    throw ConfigError("config: sr.guides must be one of both|t1w|t2w|none, got '" + token +
                      "'");
}

std::string guide_subset_name(GuideSubset subset) {
    switch (subset) {
        case GuideSubset::Both: return "both";
        case GuideSubset::T1w: return "t1w";
        case GuideSubset::T2w: return "t2w";
        case GuideSubset::None: return "none";
    }
    return "?";
}

PipelineConfig pipeline_config_from(const Config& config) {
    PipelineConfig pc;

    const int width = config.get_int("phantom", "width", 128);
    const int height = config.get_int("phantom", "height", 128);
    const std::uint64_t phantom_seed = config.get_u64("phantom", "seed", 1234);
    pc.phantom = default_phantom(width, height, phantom_seed);
    pc.phantom.grid.spacing_x = config.get_double("phantom", "spacing_x", 1.0);
    pc.phantom.grid.spacing_y = config.get_double("phantom", "spacing_y", 1.0);
    pc.phantom.texture_amplitude =
        config.get_double("phantom", "texture_amplitude", pc.phantom.texture_amplitude);

    const auto ellipse_lines = config.entries("phantom", "ellipse");
    if (!ellipse_lines.empty()) pc.phantom.tissues.clear();
    for (const auto& pairs : ellipse_lines) {
        Ellipse e;
        try {
            e.cls = parse_tissue_class(pairs.front().second);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("config: phantom.ellipse: ") + err.what());
        }
        for (std::size_t i = 1; i < pairs.size(); ++i) {
            const auto& [key, value] = pairs[i];
            const double num = parse_double_field("phantom.ellipse." + key, value);
            if (key == "cx") e.cx = num;
            else if (key == "cy") e.cy = num;
            else if (key == "ax") e.ax = num;
            else if (key == "ay") e.ay = num;
            else if (key == "rot") e.rot = num;
            else throw ConfigError("config: phantom.ellipse: unknown key '" + key + "'");
        }
        pc.phantom.tissues.push_back(e);
    }
    for (const auto& pairs : config.entries("phantom", "tissue")) {
        TissueClass cls;
        try {
            cls = parse_tissue_class(pairs.front().second);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("config: phantom.tissue: ") + err.what());
        }
        TissueValues v = pc.phantom.tissue_values[cls];
        for (std::size_t i = 1; i < pairs.size(); ++i) {
            const auto& [key, value] = pairs[i];
            const double num = parse_double_field("phantom.tissue." + key, value);
            if (key == "pd") v.pd = num;
            else if (key == "t1") v.t1 = num;
            else if (key == "t2") v.t2 = num;
            else throw ConfigError("config: phantom.tissue: unknown key '" + key + "'");
        }
        pc.phantom.tissue_values[cls] = v;
    }

    pc.degrade.keep_x = config.get_double("degrade", "keep_x", 0.5);
    pc.degrade.keep_y = config.get_double("degrade", "keep_y", 0.5);
    pc.degrade.sigma = config.get_double("degrade", "sigma", 0.1);
    pc.degrade.seed = config.get_u64("degrade", "seed", 9000);

    pc.fit.t1_points = config.get_int("fit", "t1_points", 64);
    pc.fit.t1_min = config.get_double("fit", "t1_min", 50.0);
    pc.fit.t1_max = config.get_double("fit", "t1_max", 4300.0);
    pc.fit.t2_points = config.get_int("fit", "t2_points", 64);
    pc.fit.t2_min = config.get_double("fit", "t2_min", 10.0);
    pc.fit.t2_max = config.get_double("fit", "t2_max", 2000.0);
    pc.fit.refine_iters = config.get_int("fit", "refine_iters", 20);
    pc.fit.tol = config.get_double("fit", "tol", 1e-6);

    pc.model_name = config.get_string("sr", "name", "sr");
    pc.alpha = config.get_double("sr", "alpha", 1000.0);
    pc.sr_sigma = config.get_double("sr", "sigma", pc.degrade.sigma);
    pc.guide_subset = parse_guide_subset(config.get_string("sr", "guides", "both"));
    pc.pd_box = {config.get_double("sr", "pd_min", 0.0), config.get_double("sr", "pd_max", 160.0)};
    pc.t1_box = {config.get_double("sr", "t1_min", 1.0), config.get_double("sr", "t1_max", 4300.0)};
    pc.t2_box = {config.get_double("sr", "t2_min", 1.0), config.get_double("sr", "t2_max", 2000.0)};

    pc.solver.max_iters = config.get_int("solver", "max_iters", 2000);
    pc.solver.step = config.get_double("solver", "step", 1e-2);
    pc.solver.tol = config.get_double("solver", "tol", 1e-7);
    pc.solver.max_backtracks = config.get_int("solver", "max_backtracks", 40);

    for (const auto& pairs : config.entries("evaluate", "model")) {
        try {
            pc.eval_synth.push_back(parse_spec(pairs));
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("config: evaluate.model: ") + err.what());
        }
    }

    pc.data_dir = config.get_string("paths", "data_dir", pc.data_dir.string());
    pc.sr_dir = config.get_string("paths", "sr_dir", pc.sr_dir.string());
    pc.report_path = config.get_string("paths", "report", pc.report_path.string());

    try {
        pc.phantom.validate();
        pc.degrade.validate();
        pc.fit.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("config: ") + err.what());
    }
    if (!(pc.alpha >= 0)) throw ConfigError("config: sr.alpha must be >= 0");
    if (!(pc.sr_sigma > 0)) throw ConfigError("config: sr.sigma must be > 0");
    if (pc.solver.max_iters < 1) throw ConfigError("config: solver.max_iters must be >= 1");
    if (!(pc.solver.step > 0)) throw ConfigError("config: solver.step must be > 0");
    return pc;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return pipeline_config_from(Config::parse_file(path));
}

}  // namespace qsr
