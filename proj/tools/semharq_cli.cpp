#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semharq/checkpoint.hpp"
#include "semharq/experiment.hpp"
#include "semharq/knowledge_base.hpp"

namespace fs = std::filesystem;
using namespace semharq;

namespace {

ExperimentConfig make_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
    ExperimentConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    for (const auto& kv : overrides) apply_override(cfg, kv);
    cfg.validate();
    return cfg;
}

void require_artifacts(const ExperimentConfig& cfg) {
    std::vector<std::string> needed = {cfg.out_dir + "/codec.ckpt", cfg.out_dir + "/embedder.ckpt"};
    for (double snr : cfg.snr_list) {
        const std::string tag = snr_tag(snr);
        needed.push_back(cfg.out_dir + "/disc_snr" + tag + ".ckpt");
        needed.push_back(cfg.out_dir + "/gen_snr" + tag + ".ckpt");
        needed.push_back(cfg.out_dir + "/det_snr" + tag + ".ckpt");
    }
    for (const auto& path : needed) {
        if (!fs::exists(path)) {
            throw ConfigError("missing checkpoint: " + path + " (run train or pipeline first)");
        }
    }
}

void inspect_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    std::string first;
    std::getline(is, first);
    is.close();

    if (first == kCheckpointMagic) {
        const auto manifest = read_checkpoint_manifest(path);
        std::size_t total = 0;
        std::cout << path << ": checkpoint, " << manifest.size() << " parameters\n";
        for (const auto& e : manifest) {
            std::size_t n = 1;
            std::cout << "  " << e.name << " [";
            for (std::size_t i = 0; i < e.shape.size(); ++i) {
                if (i) std::cout << "x";
                std::cout << e.shape[i];
                n *= e.shape[i];
            }
            std::cout << "]\n";
            total += n;
        }
        std::cout << "  total values: " << total << "\n";
        return;
    }
    if (first == kKbMagic) {
        const LocalKnowledgeBase kb = load_kb(path);
        std::size_t errors = 0;
        for (const auto& s : kb.k1) errors += s.label == 0 ? 1 : 0;
        std::cout << path << ": knowledge base @ " << format_double(kb.meta.snr_db)
                  << " dB, seed " << kb.meta.seed << "\n"
                  << "  K1 " << kb.k1.size() << " (" << errors << " abnormal), K2 "
                  << kb.k2.size() << ", K3 " << kb.k3.size() << "\n";
        return;
    }
    if (first.rfind("scheme,", 0) == 0) {
        const auto rows = parse_csv(path);
        std::cout << path << ": " << rows.size() << " result rows\n";
        for (const auto& s : summarize(rows)) {
            std::cout << "  " << s.scheme << "/" << s.combine_rule << " @ "
                      << format_double(s.snr_db) << " dB: mean BLEU "
                      << format_double(s.mean_bleu) << ", mean similarity "
                      << format_double(s.mean_similarity) << ", mean rounds "
                      << format_double(s.mean_rounds) << " (n=" << s.n << ")\n";
        }
        return;
    }
    std::cout << path << ": unrecognized format\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic HARQ link-level simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "Key-value config file");
    app.add_option("-s,--set", overrides, "Override a config key (key=value)");

    auto* cmd_train = app.add_subcommand("train", "Train codec, embedder and HARQ modules");
    auto* cmd_genkb = app.add_subcommand("genkb", "Generate knowledge bases per SNR point");
    auto* cmd_sweep = app.add_subcommand("sweep", "Run the scheme x SNR sweep (needs artifacts)");
    auto* cmd_pipeline = app.add_subcommand("pipeline", "Full pipeline: train, KBs, modules, sweep");
    auto* cmd_inspect = app.add_subcommand("inspect", "Describe checkpoints, KBs or result CSVs");
    std::vector<std::string> inspect_paths;
    cmd_inspect->add_option("paths", inspect_paths, "Files to inspect")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_inspect->parsed()) {
            for (const auto& p : inspect_paths) inspect_file(p);
            return 0;
        }
        ExperimentConfig cfg = make_config(config_path, overrides);
        if (cmd_train->parsed()) {
            pipeline_prepare(cfg);
        } else if (cmd_genkb->parsed()) {
            PipelineArtifacts art = run_corpus_stage(cfg);
            run_codec_stage(cfg, art);
            run_kb_stage(cfg, art);
        } else if (cmd_sweep->parsed()) {
            require_artifacts(cfg);
            PipelineArtifacts art = pipeline_prepare(cfg);
            const auto rows = run_sweep(cfg, art);
            emit_csv(rows, cfg.out_dir + "/results.csv");
            emit_summary_csv(summarize(rows), cfg.out_dir + "/summary.csv");
            std::cout << "wrote " << cfg.out_dir << "/results.csv\n";
        } else if (cmd_pipeline->parsed()) {
            pipeline(cfg);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const TrainError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
