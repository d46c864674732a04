#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "eft/cli.hpp"
#include "eft/errors.hpp"

namespace {

int run_validate(const std::string& config_path) {
    const auto doc = eft::cli::read_config_file(config_path);
    const auto base = std::filesystem::path(config_path).parent_path().string();
    const auto problems = eft::cli::validate(doc, base.empty() ? "." : base);
    if (problems.empty()) {
        std::cout << "config valid\n";
        return 0;
    }
    std::cout << problems.size() << " violation(s):\n";
    for (const auto& p : problems) std::cout << "  - " << p << '\n';
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chebyshev-moment spectral estimation experiments"};
    std::string mode, config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;

    std::vector<std::string> choices = eft::cli::kModes;
    choices.push_back("validate");
    app.add_option("mode", mode, "validate or an experiment mode")->required()->check(CLI::IsMember(choices));
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory, overrides output_dir");
    app.add_option("--seed", seed, "seed, overrides the config seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (mode == "validate") return run_validate(config_path);

        auto doc = eft::cli::read_config_file(config_path);
        if (doc.is_object()) {
            if (!doc.contains("mode")) doc["mode"] = mode;
            if (doc["mode"] != mode)
                throw eft::ConfigError("command mode " + mode + " differs from config mode " + doc["mode"].dump());
        }
        doc = eft::cli::apply_overrides(doc, {out_dir, seed, jobs});
        const auto base = std::filesystem::path(config_path).parent_path().string();
        const auto cfg = eft::cli::parse_config(doc, base.empty() ? "." : base);
        const auto result = eft::cli::run(cfg);
        for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "eft-spectra: " << e.what() << '\n';
        return eft::cli::exit_code_for(e);
    }
}
