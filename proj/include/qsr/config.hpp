#pragma once

#include "qsr/phantom.hpp"
#include "qsr/sr.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsr {

/// Raised on malformed or invalid configuration; the CLI maps it to exit
/// code 2. Messages name the offending "<section>.<key>".
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using KvPairs = std::vector<std::pair<std::string, std::string>>;

// Line-oriented config: '#' starts a comment, "[name]" opens a section,
// every other non-blank line is whitespace-separated key=value tokens.
// The first token's key names the entry; multi-pair lines form records
// (e.g. "model=sat_recovery tr=360").
class Config {
  public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<string>");

    bool has_section(const std::string& section) const;
    /// Value of a single-pair entry, or nullopt when absent.
    std::optional<std::string> find(const std::string& section,
                                    const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    /// All entries in a section whose first key equals head_key, in file order.
    std::vector<KvPairs> entries(const std::string& section,
                                 const std::string& head_key) const;

  private:
    struct Section {
        std::string name;
        std::vector<KvPairs> lines;
    };
    std::vector<Section> sections_;
    const Section* find_section(const std::string& name) const;
};

enum class GuideSubset { Both, T1w, T2w, None };
GuideSubset parse_guide_subset(const std::string& token);  // throws ConfigError
std::string guide_subset_name(GuideSubset subset);

struct PipelineConfig {
    PhantomSpec phantom;
    DegradeSpec degrade;
    FitSettings fit;

    std::string model_name = "sr";
    double alpha = 1000.0;
    double sr_sigma = 0.1;
    GuideSubset guide_subset = GuideSubset::Both;
    ChannelBox pd_box{0.0, 160.0};
    ChannelBox t1_box{1.0, 4300.0};
    ChannelBox t2_box{1.0, 2000.0};

    SolverSettings solver;

    /// Extra contrasts synthesized and scored by the evaluate command.
    std::vector<AcquisitionSpec> eval_synth;

    std::filesystem::path data_dir = "out/data";
    std::filesystem::path sr_dir = "out/sr";
    std::filesystem::path report_path = "out/report.tsv";
};

PipelineConfig pipeline_config_from(const Config& config);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace qsr
