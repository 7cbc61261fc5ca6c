// gpe: command-line front end for the grouped-prompt-ensemble pipeline.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 numeric failure.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gpe/checkpoint.hpp"
#include "gpe/config.hpp"
#include "gpe/gradcheck.hpp"
#include "gpe/masking.hpp"
#include "gpe/metrics.hpp"
#include "gpe/synthdata.hpp"
#include "gpe/train.hpp"

namespace fs = std::filesystem;

namespace {

class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream os(path);
    if (!os) throw gpe::ConfigError("cannot write " + path.string());
    os << body;
}

// One subcommand's configuration: defaults, optional --config file, and CLI
// overrides with the highest precedence.
struct Resolver {
    gpe::RunConfig cfg;
    std::map<std::string, std::string> defaults;
    std::vector<std::pair<CLI::Option*, std::string>> binds;
    std::string config_path;

    explicit Resolver(std::vector<std::string> keys) : cfg(std::move(keys)) {}

    void add_config_option(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file");
    }
    CLI::Option* bind(CLI::App* cmd, const std::string& key, std::string& slot,
                      const std::string& help, const std::string& dflt) {
        defaults[key] = dflt;
        CLI::Option* opt = cmd->add_option("--" + key, slot, help);
        binds.emplace_back(opt, key);
        return opt;
    }
    // Called after parse: file first, explicit flags on top.
    void resolve(const std::vector<std::string>& slots_keys,
                 const std::vector<std::string*>& slots) {
        if (!config_path.empty()) cfg.load_file(config_path);
        for (std::size_t i = 0; i < binds.size(); ++i)
            if (binds[i].first->count() > 0)
                cfg.set(binds[i].second, *slots[i]);
        (void)slots_keys;
    }
};

gpe::EnsembleMode parse_mode(const std::string& s) {
    if (s == "group_wise") return gpe::EnsembleMode::group_wise;
    if (s == "pair_wise") return gpe::EnsembleMode::pair_wise;
    if (s == "pooled") return gpe::EnsembleMode::pooled;
    throw gpe::ConfigError("unknown ensemble mode: " + s);
}

gpe::LayoutVariant parse_variant(const std::string& s) {
    if (s == "special-first") return gpe::LayoutVariant::special_first;
    if (s == "eos-last") return gpe::LayoutVariant::eos_last;
    throw gpe::ConfigError("unknown layout variant: " + s);
}

std::string report_text(const gpe::EvalReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "base_acc = " << r.base_acc << "\n"
       << "novel_acc = " << r.novel_acc << "\n"
       << "harmonic = " << r.harmonic << "\n"
       << "zero_shot_base = " << r.zero_shot_base << "\n"
       << "zero_shot_novel = " << r.zero_shot_novel << "\n"
       << "vendi_text = " << r.vendi_text << "\n"
       << "vendi_image = " << r.vendi_image << "\n";
    return os.str();
}

// ---------------------------------------------------------------- gen-data

int cmd_gen_data(const gpe::RunConfig& cfg, const std::map<std::string, std::string>& defaults,
                 const std::string& out_dir) {
    gpe::TaskSpec spec;
    spec.n_classes = static_cast<std::size_t>(cfg.get_int("n_classes", 8));
    spec.n_x = static_cast<std::size_t>(cfg.get_int("n_x", 8));
    spec.d_v = static_cast<std::size_t>(cfg.get_int("d_v", 32));
    spec.noise_sigma = cfg.get_real("noise_sigma", 0.25);
    spec.samples_per_class = static_cast<std::size_t>(cfg.get_int("samples_per_class", 48));
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
    spec.base_fraction = cfg.get_real("base_fraction", 0.5);
    spec.vocab = static_cast<std::size_t>(cfg.get_int("vocab", 64));

    gpe::Dataset ds = gpe::generate_task(spec);
    fs::create_directories(out_dir);
    gpe::save_dataset((fs::path(out_dir) / "dataset.bin").string(), ds);
    write_text(fs::path(out_dir) / "config.txt", cfg.resolved(defaults));
    std::cout << "wrote " << (fs::path(out_dir) / "dataset.bin").string() << " ("
              << ds.samples.size() << " samples, " << ds.base_class_count << " base classes)\n";
    return 0;
}

// ---------------------------------------------------------------- pretrain

int cmd_pretrain(const gpe::RunConfig& cfg, const std::map<std::string, std::string>& defaults,
                 const std::string& data_path, const std::string& out_dir) {
    gpe::Dataset ds = gpe::load_dataset(data_path);

    gpe::PretrainConfig pc;
    pc.steps = static_cast<std::size_t>(cfg.get_int("steps", 220));
    pc.lr = cfg.get_real("lr", 0.05);
    pc.tau = cfg.get_real("tau", 0.07);
    pc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
    pc.encoder.d_v = ds.spec.d_v;
    pc.encoder.d_t = static_cast<std::size_t>(cfg.get_int("d_t", 32));
    pc.encoder.d_joint = static_cast<std::size_t>(cfg.get_int("d_joint", 16));
    pc.encoder.layers = static_cast<std::size_t>(cfg.get_int("layers", 2));
    pc.encoder.heads = static_cast<std::size_t>(cfg.get_int("heads", 4));
    pc.encoder.mlp_ratio = static_cast<std::size_t>(cfg.get_int("mlp_ratio", 2));
    pc.encoder.vocab = ds.spec.vocab;
    pc.encoder.n_x = ds.spec.n_x;
    pc.encoder.n_y = static_cast<std::size_t>(cfg.get_int("n_y", 8));
    pc.encoder.text_variant = parse_variant(cfg.get_str("text_variant", "eos-last"));
    pc.encoder.validate();

    gpe::PretrainReport rep;
    gpe::EncoderWeights w = gpe::pretrain_clip(ds, pc, &rep);
    if (!std::isfinite(rep.final_loss)) throw NumericFailure("pretraining diverged");

    const std::size_t k_main = static_cast<std::size_t>(cfg.get_int("k_main", 9));
    const std::size_t k_aux = static_cast<std::size_t>(cfg.get_int("k_aux", 6));
    const double sigma = cfg.get_real("prompt_init_sigma", 0.02);
    gpe::RngState prng{gpe::derive_seed(pc.seed, "prompt-init")};
    gpe::PromptSet vp =
        gpe::init_prompt_set(w.vis_special, k_main, k_aux, prng, gpe::Modality::vision, sigma);
    gpe::PromptSet tp =
        gpe::init_prompt_set(w.txt_special, k_main, k_aux, prng, gpe::Modality::text, sigma);

    fs::create_directories(out_dir);
    gpe::save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), w, vp, tp);
    write_text(fs::path(out_dir) / "config.txt", cfg.resolved(defaults));
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << "final_loss = " << rep.final_loss
       << "\nzero_shot_holdout = " << rep.zero_shot_holdout << "\n";
    write_text(fs::path(out_dir) / "pretrain_report.txt", os.str());
    std::cout << os.str();
    return 0;
}

// -------------------------------------------------------------------- tune

gpe::TrainConfig train_config_from(const gpe::RunConfig& cfg) {
    gpe::TrainConfig tc;
    tc.lr = cfg.get_real("lr", tc.lr);
    tc.batch = static_cast<std::size_t>(cfg.get_int("batch", static_cast<std::int64_t>(tc.batch)));
    tc.epochs =
        static_cast<std::size_t>(cfg.get_int("epochs", static_cast<std::int64_t>(tc.epochs)));
    tc.shots = static_cast<std::size_t>(cfg.get_int("shots", static_cast<std::int64_t>(tc.shots)));
    tc.lambda = cfg.get_real("lambda", tc.lambda);
    tc.k_main =
        static_cast<std::size_t>(cfg.get_int("k_main", static_cast<std::int64_t>(tc.k_main)));
    tc.k_aux = static_cast<std::size_t>(cfg.get_int("k_aux", static_cast<std::int64_t>(tc.k_aux)));
    tc.mode = parse_mode(cfg.get_str("mode", "group_wise"));
    tc.use_special_tokens = cfg.get_bool("use_special_tokens", true);
    tc.tau = cfg.get_real("tau", tc.tau);
    tc.prompt_init_sigma = cfg.get_real("prompt_init_sigma", tc.prompt_init_sigma);
    tc.cosine_schedule = cfg.get_bool("cosine_schedule", false);
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
    return tc;
}

int cmd_tune(const gpe::RunConfig& cfg, const std::map<std::string, std::string>& defaults,
             const std::string& data_path, const std::string& ckpt_path,
             const std::string& out_dir) {
    gpe::Dataset ds = gpe::load_dataset(data_path);
    gpe::LoadedCheckpoint ck = gpe::load_checkpoint(ckpt_path);
    gpe::TrainConfig tc = train_config_from(cfg);

    gpe::TuneResult res = gpe::tune_prompts(ck.weights, ds, tc);
    if (!std::isfinite(res.report.harmonic) && !std::isfinite(res.report.base_acc))
        throw NumericFailure("tuning produced non-finite metrics");

    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "metrics.csv", gpe::metrics_csv(res.trace));
    write_text(fs::path(out_dir) / "config.txt", cfg.resolved(defaults));
    write_text(fs::path(out_dir) / "report.txt", report_text(res.report));
    gpe::save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), ck.weights,
                         res.vis_prompts, res.txt_prompts);
    std::cout << report_text(res.report);
    return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const gpe::RunConfig& cfg, const std::string& data_path,
             const std::string& ckpt_path, const std::string& out_dir) {
    gpe::Dataset ds = gpe::load_dataset(data_path);
    gpe::LoadedCheckpoint ck = gpe::load_checkpoint(ckpt_path);
    gpe::TrainConfig tc = train_config_from(cfg);
    tc.k_main = ck.vis_prompts.k_main();
    tc.k_aux = ck.vis_prompts.k_aux();

    gpe::EvalReport rep =
        gpe::evaluate(ck.weights, ck.vis_prompts, ck.txt_prompts, ds, tc, nullptr);
    std::cout << report_text(rep);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "report.txt", report_text(rep));
    }
    return 0;
}

// ------------------------------------------------------------ inspect-mask

int cmd_inspect_mask(const std::string& modality, std::size_t nx, std::size_t k, std::size_t kaux,
                     const std::string& variant) {
    gpe::SequenceLayout lay{nx, k, kaux};
    gpe::AttentionMask m;
    if (modality == "vision")
        m = gpe::build_vision_mask(lay);
    else if (modality == "text")
        m = gpe::build_text_mask(lay);
    else
        throw gpe::ConfigError("modality must be vision or text");
    m = gpe::apply_layout_variant(m, parse_variant(variant));
    std::cout << gpe::mask_to_csv(m);
    return 0;
}

// --------------------------------------------------------------- diversity

int cmd_diversity(const std::string& data_path, const std::string& ckpt_path) {
    gpe::Dataset ds = gpe::load_dataset(data_path);
    gpe::LoadedCheckpoint ck = gpe::load_checkpoint(ckpt_path);
    const std::size_t k = ck.txt_prompts.k_main();

    std::vector<std::size_t> all_classes;
    for (std::size_t c = 0; c < ds.spec.n_classes; ++c) all_classes.push_back(c);
    std::vector<gpe::Matrix> txt =
        gpe::class_text_embeddings(ck.weights, ck.txt_prompts, ds, all_classes);

    std::cout << "metric,value\n";
    std::cout.precision(6);
    std::cout << std::fixed;
    double mean = 0.0;
    for (std::size_t c = 0; c < txt.size(); ++c) {
        gpe::Matrix mains = txt[c].slice_rows(1, 1 + 2 * k);
        const double vs = gpe::vendi_score(mains);
        mean += vs;
        std::cout << "vendi_text_class_" << c << "," << vs << "\n";
    }
    mean /= static_cast<double>(txt.size());
    std::cout << "vendi_text_mean," << mean << "\n";

    gpe::Matrix stacked(txt.size() * 2 * k, ck.weights.cfg.d_joint);
    std::size_t row = 0;
    for (const gpe::Matrix& t : txt)
        for (std::size_t i = 1; i <= 2 * k; ++i, ++row)
            for (std::size_t j = 0; j < stacked.cols; ++j) stacked(row, j) = t(i, j);
    std::cout << "vendi_text_stacked," << gpe::vendi_score(stacked) << "\n";

    const std::size_t n_img = std::min<std::size_t>(32, ds.samples.size());
    gpe::Matrix imgs(n_img, ck.weights.cfg.d_joint);
    for (std::size_t i = 0; i < n_img; ++i) {
        gpe::Matrix e = gpe::image_joint_embedding(ck.weights, ck.vis_prompts,
                                                   ds.samples[i].image_tokens);
        for (std::size_t j = 0; j < imgs.cols; ++j) imgs(i, j) = e(0, j);
    }
    std::cout << "vendi_image," << gpe::vendi_score(imgs) << "\n";
    return 0;
}

// --------------------------------------------------------------- gradcheck

int cmd_gradcheck(std::uint64_t seed) {
    gpe::GradCheckResult r = gpe::run_gradcheck(seed);
    std::cout.precision(3);
    std::cout << std::scientific << "max relative error " << r.max_rel_error << " (worst tensor: "
              << r.worst_tensor << ")\n";
    if (!(r.max_rel_error <= 1e-4)) {
        std::cerr << "gradcheck failed: tolerance 1e-4 exceeded\n";
        return 2;
    }
    return 0;
}

// ------------------------------------------------------------------ ablate

int cmd_ablate(const gpe::RunConfig& cfg, const std::string& out_dir) {
    gpe::TaskSpec spec;
    spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
    gpe::Dataset ds = gpe::generate_task(spec);

    gpe::PretrainConfig pc;
    pc.seed = spec.seed;
    pc.steps = static_cast<std::size_t>(cfg.get_int("steps", 220));
    pc.encoder.d_v = ds.spec.d_v;
    pc.encoder.vocab = ds.spec.vocab;
    pc.encoder.n_x = ds.spec.n_x;
    gpe::EncoderWeights w = gpe::pretrain_clip(ds, pc, nullptr);

    gpe::TrainConfig base = train_config_from(cfg);
    base.seed = spec.seed;

    struct Row {
        std::string name;
        gpe::EnsembleMode mode;
        double lambda;
    };
    const std::vector<Row> rows = {
        {"GPE", gpe::EnsembleMode::group_wise, base.lambda},
        {"GPE w/o grouping", gpe::EnsembleMode::pooled, base.lambda},
        {"GPE w/o cov loss", gpe::EnsembleMode::group_wise, 0.0},
        {"GPE w/o grouping & cov loss", gpe::EnsembleMode::pooled, 0.0},
    };

    std::ostringstream os;
    os << "variant,base,novel,H,vendi_text\n";
    os.precision(4);
    os << std::fixed;
    for (const Row& row : rows) {
        gpe::TrainConfig tc = base;
        tc.mode = row.mode;
        tc.lambda = row.lambda;
        gpe::TuneResult res = gpe::tune_prompts(w, ds, tc);
        os << row.name << "," << res.report.base_acc << "," << res.report.novel_acc << ","
           << res.report.harmonic << "," << res.report.vendi_text << "\n";
    }
    std::cout << os.str();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "ablation.csv", os.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grouped prompt ensemble pipeline (tiny dual encoder, synthetic tasks)"};
    app.require_subcommand(1);

    // gen-data ------------------------------------------------------------
    const std::vector<std::string> gen_keys = {"n_classes", "n_x",  "d_v",           "noise_sigma",
                                               "samples_per_class", "seed",          "base_fraction",
                                               "vocab"};
    Resolver gen_r(gen_keys);
    std::string gen_out = "out";
    std::vector<std::string> gen_slots(gen_keys.size());
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic base/novel task");
    gen->add_option("--out", gen_out, "output directory");
    gen_r.add_config_option(gen);
    {
        const std::vector<std::string> dflt = {"8", "8", "32", "0.25", "48", "42", "0.5", "64"};
        for (std::size_t i = 0; i < gen_keys.size(); ++i)
            gen_r.bind(gen, gen_keys[i], gen_slots[i], "", dflt[i]);
    }

    // pretrain ------------------------------------------------------------
    const std::vector<std::string> pre_keys = {
        "steps", "lr",  "tau", "seed",        "d_t",   "d_joint",          "layers",
        "heads", "mlp_ratio", "n_y", "text_variant", "k_main", "k_aux", "prompt_init_sigma"};
    Resolver pre_r(pre_keys);
    std::string pre_data, pre_out = "out";
    std::vector<std::string> pre_slots(pre_keys.size());
    CLI::App* pre = app.add_subcommand("pretrain", "contrastively pretrain the frozen encoder");
    pre->add_option("--data", pre_data, "dataset file")->required();
    pre->add_option("--out", pre_out, "output directory");
    pre_r.add_config_option(pre);
    {
        const std::vector<std::string> dflt = {"220", "0.05", "0.07", "42", "32", "16", "2",
                                               "4",   "2",    "8",    "eos-last", "9", "6", "0.02"};
        for (std::size_t i = 0; i < pre_keys.size(); ++i)
            pre_r.bind(pre, pre_keys[i], pre_slots[i], "", dflt[i]);
    }

    // tune / eval ----------------------------------------------------------
    const std::vector<std::string> tune_keys = {
        "lr",    "batch", "epochs", "shots", "lambda", "k_main", "k_aux",
        "mode",  "use_special_tokens", "tau", "prompt_init_sigma", "cosine_schedule", "seed"};
    const std::vector<std::string> tune_dflt = {"0.01", "4",    "30",   "16",   "500",  "9",
                                                "6",    "group_wise", "true", "0.01", "0.02",
                                                "false", "42"};
    Resolver tune_r(tune_keys);
    std::string tune_data, tune_ckpt, tune_out = "out";
    std::vector<std::string> tune_slots(tune_keys.size());
    CLI::App* tune = app.add_subcommand("tune", "few-shot prompt tuning on the base classes");
    tune->add_option("--data", tune_data, "dataset file")->required();
    tune->add_option("--checkpoint", tune_ckpt, "pretrained checkpoint")->required();
    tune->add_option("--out", tune_out, "output directory");
    tune_r.add_config_option(tune);
    for (std::size_t i = 0; i < tune_keys.size(); ++i)
        tune_r.bind(tune, tune_keys[i], tune_slots[i], "", tune_dflt[i]);

    Resolver eval_r(tune_keys);
    std::string eval_data, eval_ckpt, eval_out;
    std::vector<std::string> eval_slots(tune_keys.size());
    CLI::App* eval = app.add_subcommand("eval", "base/novel accuracy and diversity report");
    eval->add_option("--data", eval_data, "dataset file")->required();
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint with tuned prompts")->required();
    eval->add_option("--out", eval_out, "optional output directory");
    eval_r.add_config_option(eval);
    for (std::size_t i = 0; i < tune_keys.size(); ++i)
        eval_r.bind(eval, tune_keys[i], eval_slots[i], "", tune_dflt[i]);

    // inspect-mask ----------------------------------------------------------
    std::string im_modality = "vision", im_variant = "special-first";
    std::size_t im_nx = 8, im_k = 9, im_kaux = 6;
    CLI::App* im = app.add_subcommand("inspect-mask", "dump an attention mask as CSV");
    im->add_option("--modality", im_modality, "vision|text");
    im->add_option("--nx", im_nx, "feature positions N");
    im->add_option("--k", im_k, "main prompts per group K");
    im->add_option("--kaux", im_kaux, "auxiliary prompts K'");
    im->add_option("--variant", im_variant, "special-first|eos-last");

    // diversity --------------------------------------------------------------
    std::string div_data, div_ckpt;
    CLI::App* div = app.add_subcommand("diversity", "Vendi scores from a checkpoint");
    div->add_option("--data", div_data, "dataset file")->required();
    div->add_option("--checkpoint", div_ckpt, "checkpoint file")->required();

    // gradcheck ----------------------------------------------------------------
    std::uint64_t gc_seed = 7;
    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
    gc->add_option("--seed", gc_seed, "instance seed");

    // ablate -------------------------------------------------------------------
    Resolver abl_r(std::vector<std::string>{"seed", "steps", "epochs", "lr", "batch", "shots",
                                            "lambda", "k_main", "k_aux", "tau",
                                            "use_special_tokens", "mode", "prompt_init_sigma",
                                            "cosine_schedule"});
    std::string abl_out;
    const std::vector<std::string> abl_keys = {"seed",   "steps", "epochs", "lr",
                                               "batch",  "shots", "lambda", "k_main",
                                               "k_aux",  "tau"};
    const std::vector<std::string> abl_dflt = {"42",  "220", "30", "0.01", "4",
                                               "16",  "500", "9",  "6",    "0.01"};
    std::vector<std::string> abl_slots(abl_keys.size());
    CLI::App* abl = app.add_subcommand("ablate", "grouping / covariance-loss ablation table");
    abl->add_option("--out", abl_out, "optional output directory");
    abl_r.add_config_option(abl);
    for (std::size_t i = 0; i < abl_keys.size(); ++i)
        abl_r.bind(abl, abl_keys[i], abl_slots[i], "", abl_dflt[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            std::vector<std::string*> sp;
            for (auto& s : gen_slots) sp.push_back(&s);
            gen_r.resolve(gen_keys, sp);
            return cmd_gen_data(gen_r.cfg, gen_r.defaults, gen_out);
        }
        if (pre->parsed()) {
            std::vector<std::string*> sp;
            for (auto& s : pre_slots) sp.push_back(&s);
            pre_r.resolve(pre_keys, sp);
            return cmd_pretrain(pre_r.cfg, pre_r.defaults, pre_data, pre_out);
        }
        if (tune->parsed()) {
            std::vector<std::string*> sp;
            for (auto& s : tune_slots) sp.push_back(&s);
            tune_r.resolve(tune_keys, sp);
            return cmd_tune(tune_r.cfg, tune_r.defaults, tune_data, tune_ckpt, tune_out);
        }
        if (eval->parsed()) {
            std::vector<std::string*> sp;
            for (auto& s : eval_slots) sp.push_back(&s);
            eval_r.resolve(tune_keys, sp);
            return cmd_eval(eval_r.cfg, eval_data, eval_ckpt, eval_out);
        }
        if (im->parsed()) return cmd_inspect_mask(im_modality, im_nx, im_k, im_kaux, im_variant);
        if (div->parsed()) return cmd_diversity(div_data, div_ckpt);
        if (gc->parsed()) return cmd_gradcheck(gc_seed);
        if (abl->parsed()) {
            std::vector<std::string*> sp;
            for (auto& s : abl_slots) sp.push_back(&s);
            abl_r.resolve(abl_keys, sp);
            return cmd_ablate(abl_r.cfg, abl_out);
        }
    } catch (const gpe::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const gpe::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 2;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        // ShapeError / DomainError: bad numerics reached a kernel
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
