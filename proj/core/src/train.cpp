#include "gpe/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gpe/metrics.hpp"
#include "gpe/numeric.hpp"

namespace gpe {

namespace {

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Special-token pair only: CLIP's original inference path.
std::size_t predict_special_only(const Matrix& v, const std::vector<Matrix>& t_classes) {
    std::vector<double> sims(t_classes.size());
    for (std::size_t c = 0; c < t_classes.size(); ++c)
        sims[c] = cosine_similarity(v.row(0), t_classes[c].row(0));
    return argmax(sims);
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) param.data[i] -= lr * grad.data[i];
}

bool has_nan(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return true;
    return false;
}

}  // namespace

EncoderWeights pretrain_clip(const Dataset& dataset, const PretrainConfig& cfg,
                             PretrainReport* report) {
    EncoderConfig enc = cfg.encoder;
    enc.n_x = dataset.spec.n_x;
    enc.d_v = dataset.spec.d_v;
    RngState rng{derive_seed(cfg.seed, "pretrain-init")};
    EncoderWeights weights = init_encoder_weights(enc, rng);

    const std::size_t n_classes = dataset.spec.n_classes;
    const Matrix vis_mask = input_band_mask(Modality::vision, enc.n_x, LayoutVariant::special_first);
    const Matrix txt_mask = input_band_mask(Modality::text, enc.n_y, enc.text_variant);
    const std::size_t txt_special_pos =
        enc.text_variant == LayoutVariant::eos_last ? enc.n_y : 0;

    // Per-class sample pools; the last sample of each class is held out for
    // the zero-shot report.
    std::vector<std::vector<std::size_t>> pools(n_classes);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        pools[dataset.samples[i].class_id].push_back(i);

    RngState step_rng{derive_seed(cfg.seed, "pretrain-steps")};
    double last_loss = 0.0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        WeightVars wv = wrap_weights(weights, /*trainable=*/true);
        std::vector<ad::Var> v_rows, t_rows;
        std::vector<std::size_t> diag(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) {
            const std::size_t pick = next_u64(step_rng) % (pools[c].size() - 1);
            const Sample& s = dataset.samples[pools[c][pick]];
            ad::Var x_last = encode_image_ad(s.image_tokens, nullptr, wv, vis_mask);
            v_rows.push_back(ad::matmul(ad::slice_rows(x_last, 0, 1), wv.proj_v));
            ad::Var y_last =
                encode_text_ad(dataset.class_token_sequence(c, enc.n_y), nullptr, wv, txt_mask);
            t_rows.push_back(ad::matmul(
                ad::slice_rows(y_last, txt_special_pos, txt_special_pos + 1), wv.proj_t));
            diag[c] = c;
        }
        ad::Var vn = ad::normalize_rows(ad::concat_rows(v_rows));
        ad::Var tn = ad::normalize_rows(ad::concat_rows(t_rows));
        ad::Var logits = ad::scale(ad::matmul(vn, ad::transpose(tn)), 1.0 / cfg.tau);
        ad::Var loss_i2t = ad::cross_entropy_from_logits(logits, diag);
        ad::Var loss_t2i = ad::cross_entropy_from_logits(ad::transpose(logits), diag);
        ad::Var loss = ad::scale(ad::add(loss_i2t, loss_t2i), 0.5);
        last_loss = loss.scalar();
        if (!std::isfinite(last_loss))
            throw std::runtime_error("pretrain_clip: loss diverged (NaN) at step " +
                                     std::to_string(step));
        ad::backward(loss);
        std::vector<Matrix*> params = weight_pointers(weights);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& g = wv.all[i].grad();
            if (g.size() == 0) continue;
            sgd_step(*params[i], g, cfg.lr);
        }
    }

    if (report) {
        report->final_loss = last_loss;
        std::vector<Matrix> t_classes;
        std::vector<std::size_t> all_classes(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c) {
            all_classes[c] = c;
            Matrix y_last = encode_text(dataset.class_token_sequence(c, enc.n_y), nullptr,
                                        weights, txt_mask);
            t_classes.push_back(matmul(y_last.slice_rows(txt_special_pos, txt_special_pos + 1),
                                       weights.proj_t));
        }
        std::size_t hits = 0, total = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const Sample& s = dataset.samples[pools[c].back()];  // held out above
            Matrix x_last = encode_image(s.image_tokens, nullptr, weights, vis_mask);
            Matrix v = matmul(x_last.slice_rows(0, 1), weights.proj_v);
            std::vector<double> sims(n_classes);
            for (std::size_t k = 0; k < n_classes; ++k)
                sims[k] = cosine_similarity(v, t_classes[k].row(0));
            if (argmax(sims) == c) ++hits;
            ++total;
        }
        report->zero_shot_holdout = static_cast<double>(hits) / static_cast<double>(total);
    }
    return weights;
}

std::vector<Matrix> class_text_embeddings(const EncoderWeights& weights,
                                          const PromptSet& txt_prompts, const Dataset& dataset,
                                          const std::vector<std::size_t>& class_ids) {
    const SequenceLayout layout{weights.cfg.n_y, txt_prompts.k_main(), txt_prompts.k_aux()};
    const Matrix mask =
        apply_layout_variant(build_text_mask(layout), weights.cfg.text_variant).entries;
    std::vector<Matrix> out;
    for (std::size_t c : class_ids) {
        Matrix y_last = encode_text(dataset.class_token_sequence(c, weights.cfg.n_y),
                                    &txt_prompts, weights, mask);
        out.push_back(project_text(y_last, weights, layout));
    }
    return out;
}

Matrix image_joint_embedding(const EncoderWeights& weights, const PromptSet& vis_prompts,
                             const Matrix& image_tokens) {
    const SequenceLayout layout{image_tokens.rows, vis_prompts.k_main(), vis_prompts.k_aux()};
    const Matrix mask = build_vision_mask(layout).entries;
    Matrix x_last = encode_image(image_tokens, &vis_prompts, weights, mask);
    return project_vision(x_last, weights, layout);
}

namespace {

struct SplitEval {
    double full = 0.0;
    double special_only = 0.0;
    double vendi_image = 0.0;
};

SplitEval eval_split(const EncoderWeights& weights, const PromptSet& vis_prompts,
                     const std::vector<Matrix>& t_classes,
                     const std::vector<std::size_t>& class_ids, const Dataset& dataset,
                     const std::vector<const Sample*>& samples, const TrainConfig& cfg) {
    EnsembleConfig ecfg;
    ecfg.use_special_tokens = cfg.use_special_tokens;
    std::vector<std::size_t> preds, preds0, labels;
    double vendi_sum = 0.0;
    std::size_t vendi_n = 0;
    const std::size_t k = vis_prompts.k_main();
    for (const Sample* s : samples) {
        Matrix v = image_joint_embedding(weights, vis_prompts, s->image_tokens);
        preds.push_back(argmax(full_ensemble_predict(v, t_classes, ecfg, weights.tau)));
        preds0.push_back(predict_special_only(v, t_classes));
        std::size_t local = 0;
        while (class_ids[local] != s->class_id) ++local;
        labels.push_back(local);
        if (vendi_n < 32) {
            vendi_sum += vendi_score(v.slice_rows(1, 1 + 2 * k));
            ++vendi_n;
        }
    }
    SplitEval ev;
    ev.full = accuracy(preds, labels);
    ev.special_only = accuracy(preds0, labels);
    ev.vendi_image = vendi_n ? vendi_sum / static_cast<double>(vendi_n) : 0.0;
    return ev;
}

}  // namespace

EvalReport evaluate(const EncoderWeights& weights, const PromptSet& vis_prompts,
                    const PromptSet& txt_prompts, const Dataset& dataset,
                    const TrainConfig& cfg, const std::vector<std::size_t>* train_indices) {
    std::vector<std::size_t> base_ids, novel_ids;
    for (std::size_t c = 0; c < dataset.spec.n_classes; ++c)
        (dataset.is_base_class(c) ? base_ids : novel_ids).push_back(c);

    std::vector<bool> excluded(dataset.samples.size(), false);
    if (train_indices)
        for (std::size_t i : *train_indices) excluded[i] = true;

    std::vector<const Sample*> base_samples, novel_samples;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const Sample& s = dataset.samples[i];
        if (s.split == SplitTag::base) {
            if (!excluded[i]) base_samples.push_back(&s);
        } else {
            novel_samples.push_back(&s);
        }
    }

    EvalReport rep;
    const std::size_t k = txt_prompts.k_main();
    if (!base_ids.empty() && !base_samples.empty() && base_ids.size() >= 2) {
        std::vector<Matrix> t_base = class_text_embeddings(weights, txt_prompts, dataset, base_ids);
        SplitEval ev = eval_split(weights, vis_prompts, t_base, base_ids, dataset, base_samples, cfg);
        rep.base_acc = ev.full;
        rep.zero_shot_base = ev.special_only;
        rep.vendi_image = ev.vendi_image;
    }
    if (novel_ids.size() >= 2 && !novel_samples.empty()) {
        std::vector<Matrix> t_novel =
            class_text_embeddings(weights, txt_prompts, dataset, novel_ids);
        SplitEval ev =
            eval_split(weights, vis_prompts, t_novel, novel_ids, dataset, novel_samples, cfg);
        rep.novel_acc = ev.full;
        rep.zero_shot_novel = ev.special_only;
    }
    // Text diversity is measured on the main-prompt embeddings of every class in
    // the dataset, stacked into one set: per-class spread alone misses whether the
    // prompts keep distinct directions for classes outside the tuning split.
    if (dataset.spec.n_classes >= 2) {
        std::vector<std::size_t> all_ids(dataset.spec.n_classes);
        for (std::size_t c = 0; c < all_ids.size(); ++c) all_ids[c] = c;
        std::vector<Matrix> t_all = class_text_embeddings(weights, txt_prompts, dataset, all_ids);
        Matrix stacked(all_ids.size() * 2 * k, t_all.front().cols);
        std::size_t row = 0;
        for (const Matrix& t : t_all)
            for (std::size_t i = 1; i <= 2 * k; ++i, ++row)
                for (std::size_t j = 0; j < stacked.cols; ++j) stacked(row, j) = t(i, j);
        rep.vendi_text = vendi_score(stacked);
    }
    rep.harmonic = (rep.base_acc > 0.0 && rep.novel_acc > 0.0)
                       ? harmonic_mean(rep.base_acc, rep.novel_acc)
                       : 0.0;
    return rep;
}

TuneResult tune_prompts(const EncoderWeights& weights, const Dataset& dataset,
                        const TrainConfig& cfg) {
    RngState init_rng{derive_seed(cfg.seed, "prompt-init")};
    TuneResult res;
    res.vis_prompts = init_prompt_set(weights.vis_special, cfg.k_main, cfg.k_aux, init_rng,
                                      Modality::vision, cfg.prompt_init_sigma);
    res.txt_prompts = init_prompt_set(weights.txt_special, cfg.k_main, cfg.k_aux, init_rng,
                                      Modality::text, cfg.prompt_init_sigma);

    const std::vector<std::size_t> train_idx = few_shot_sample(dataset, cfg.shots, cfg.seed);
    std::vector<std::size_t> base_ids;
    for (std::size_t c = 0; c < dataset.spec.n_classes; ++c)
        if (dataset.is_base_class(c)) base_ids.push_back(c);
    std::vector<std::vector<std::size_t>> class_tokens;
    for (std::size_t c : base_ids)
        class_tokens.push_back(dataset.class_token_sequence(c, weights.cfg.n_y));

    LossConfig lcfg;
    lcfg.lambda = cfg.lambda;
    lcfg.tau = cfg.tau;
    lcfg.mode = cfg.mode;

    RngState shuffle_rng{derive_seed(cfg.seed, "batch-shuffle")};
    std::vector<std::size_t> order = train_idx;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[next_u64(shuffle_rng) % i]);
        const double lr = cfg.cosine_schedule
                              ? cfg.lr * 0.5 *
                                    (1.0 + std::cos(3.14159265358979323846 *
                                                    static_cast<double>(epoch) /
                                                    static_cast<double>(cfg.epochs)))
                              : cfg.lr;
        LossBreakdown epoch_loss;
        std::size_t steps = 0;
        for (std::size_t off = 0; off < order.size(); off += cfg.batch) {
            std::vector<Matrix> images;
            std::vector<std::size_t> labels;
            for (std::size_t i = off; i < std::min(off + cfg.batch, order.size()); ++i) {
                const Sample& s = dataset.samples[order[i]];
                images.push_back(s.image_tokens);
                // base classes are the leading class ids, so the local label
                // equals the class id
                labels.push_back(s.class_id);
            }
            LossResult lr_res = total_loss(images, labels, class_tokens, res.vis_prompts,
                                           res.txt_prompts, weights, lcfg);
            if (!std::isfinite(lr_res.breakdown.total))
                throw std::runtime_error("tune_prompts: loss diverged (NaN)");
            sgd_step(res.vis_prompts.group1, lr_res.grads.vis_group1, lr);
            sgd_step(res.vis_prompts.group2, lr_res.grads.vis_group2, lr);
            sgd_step(res.vis_prompts.auxiliary, lr_res.grads.vis_aux, lr);
            sgd_step(res.txt_prompts.group1, lr_res.grads.txt_group1, lr);
            sgd_step(res.txt_prompts.group2, lr_res.grads.txt_group2, lr);
            sgd_step(res.txt_prompts.auxiliary, lr_res.grads.txt_aux, lr);
            if (has_nan(res.vis_prompts.group1) || has_nan(res.txt_prompts.group1))
                throw std::runtime_error("tune_prompts: prompts diverged (NaN)");
            epoch_loss.ce_group1 += lr_res.breakdown.ce_group1;
            epoch_loss.ce_group2 += lr_res.breakdown.ce_group2;
            epoch_loss.cov_image += lr_res.breakdown.cov_image;
            epoch_loss.cov_text += lr_res.breakdown.cov_text;
            epoch_loss.total += lr_res.breakdown.total;
            ++steps;
        }
        const double inv = 1.0 / static_cast<double>(steps);
        epoch_loss.ce_group1 *= inv;
        epoch_loss.ce_group2 *= inv;
        epoch_loss.cov_image *= inv;
        epoch_loss.cov_text *= inv;
        epoch_loss.total *= inv;
        epoch_loss.lambda = cfg.lambda;

        EpochRow row;
        row.epoch = epoch + 1;
        row.loss = epoch_loss;
        row.eval = evaluate(weights, res.vis_prompts, res.txt_prompts, dataset, cfg, &train_idx);
        res.trace.push_back(row);
    }
    res.report = res.trace.empty()
                     ? evaluate(weights, res.vis_prompts, res.txt_prompts, dataset, cfg, &train_idx)
                     : res.trace.back().eval;
    return res;
}

std::string metrics_csv(const std::vector<EpochRow>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,ce_g1,ce_g2,cov_img,cov_txt,total,base_acc,novel_acc,H,vendi_txt,vendi_img\n";
    for (const EpochRow& r : trace)
        os << r.epoch << "," << r.loss.ce_group1 << "," << r.loss.ce_group2 << ","
           << r.loss.cov_image << "," << r.loss.cov_text << "," << r.loss.total << ","
           << r.eval.base_acc << "," << r.eval.novel_acc << "," << r.eval.harmonic << ","
           << r.eval.vendi_text << "," << r.eval.vendi_image << "\n";
    return os.str();
}

}  // namespace gpe
