#include "gpe/synthdata.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gpe {

std::vector<std::size_t> Dataset::class_token_sequence(std::size_t class_id,
                                                       std::size_t n_y) const {
    if (n_y < 1) throw DomainError("class_token_sequence: n_y must be >= 1");
    std::vector<std::size_t> ids(n_y, kTemplateTokenId);
    ids.back() = class_token_id(class_id);
    return ids;
}

Dataset generate_task(const TaskSpec& spec) {
    if (spec.n_classes < 4) throw DomainError("generate_task: need n_classes >= 4");
    if (spec.n_classes + kReservedTokenIds > spec.vocab)
        throw DomainError("generate_task: n_classes exceeds vocab minus reserved ids");
    Dataset ds;
    ds.spec = spec;
    ds.base_class_count = static_cast<std::size_t>(
        std::ceil(spec.base_fraction * static_cast<double>(spec.n_classes)));
    RngState proto_rng{derive_seed(spec.seed, "prototypes")};
    RngState noise_rng{derive_seed(spec.seed, "samples")};
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        Matrix proto = random_normal(proto_rng, spec.n_x, spec.d_v, 1.0);
        for (std::size_t i = 0; i < proto.rows; ++i) {
            double norm = 0.0;
            for (std::size_t j = 0; j < proto.cols; ++j) norm += proto(i, j) * proto(i, j);
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < proto.cols; ++j) proto(i, j) /= norm;
        }
        ds.prototypes.push_back(proto);
    }
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        const SplitTag tag = c < ds.base_class_count ? SplitTag::base : SplitTag::novel;
        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            Sample smp;
            smp.class_id = c;
            smp.split = tag;
            smp.image_tokens = ds.prototypes[c];
            for (double& v : smp.image_tokens.data) v += spec.noise_sigma * normal(noise_rng);
            ds.samples.push_back(std::move(smp));
        }
    }
    return ds;
}

std::vector<std::size_t> few_shot_sample(const Dataset& dataset, std::size_t shots,
                                         std::uint64_t seed) {
    if (shots > dataset.spec.samples_per_class)
        throw DomainError("few_shot_sample: shots exceeds samples per class");
    RngState rng{derive_seed(seed, "fewshot")};
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < dataset.base_class_count; ++c) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < dataset.samples.size(); ++i)
            if (dataset.samples[i].class_id == c) pool.push_back(i);
        // Partial Fisher-Yates: first `shots` entries.
        for (std::size_t i = 0; i < shots; ++i) {
            const std::size_t j = i + next_u64(rng) % (pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    }
    return out;
}

namespace {

void write_f32(std::ostream& os, double v) {
    const float f = static_cast<float>(v);
    char buf[4];
    std::memcpy(buf, &f, 4);
    os.write(buf, 4);
}

void write_u32(std::ostream& os, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    os.write(buf, 4);
}

double read_f32(std::istream& is) {
    char buf[4];
    is.read(buf, 4);
    float f;
    std::memcpy(&f, buf, 4);
    return static_cast<double>(f);
}

std::uint32_t read_u32(std::istream& is) {
    char buf[4];
    is.read(buf, 4);
    std::uint32_t v;
    std::memcpy(&v, buf, 4);
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    os << "GPEDATA v1, " << ds.spec.n_classes << ", " << ds.spec.n_x << ", " << ds.spec.d_v
       << ", " << ds.spec.samples_per_class << ", " << ds.spec.seed << "\n";
    write_f32(os, ds.spec.noise_sigma);
    write_f32(os, ds.spec.base_fraction);
    write_u32(os, static_cast<std::uint32_t>(ds.spec.vocab));
    for (const Matrix& p : ds.prototypes)
        for (double v : p.data) write_f32(os, v);
    for (const Sample& s : ds.samples)
        for (double v : s.image_tokens.data) write_f32(os, v);
    for (const Sample& s : ds.samples) write_u32(os, static_cast<std::uint32_t>(s.class_id));
    if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    std::string header;
    std::getline(is, header);
    if (header.rfind("GPEDATA v1,", 0) != 0)
        throw std::runtime_error("load_dataset: bad magic in " + path);
    TaskSpec spec;
    char comma;
    std::istringstream hs(header.substr(header.find(',') + 1));
    hs >> spec.n_classes >> comma >> spec.n_x >> comma >> spec.d_v >> comma >>
        spec.samples_per_class >> comma >> spec.seed;
    if (!hs) throw std::runtime_error("load_dataset: bad header in " + path);
    spec.noise_sigma = read_f32(is);
    spec.base_fraction = read_f32(is);
    spec.vocab = read_u32(is);
    Dataset ds;
    ds.spec = spec;
    ds.base_class_count = static_cast<std::size_t>(
        std::ceil(spec.base_fraction * static_cast<double>(spec.n_classes)));
    for (std::size_t c = 0; c < spec.n_classes; ++c) {
        Matrix p(spec.n_x, spec.d_v);
        for (double& v : p.data) v = read_f32(is);
        ds.prototypes.push_back(std::move(p));
    }
    const std::size_t n_samples = spec.n_classes * spec.samples_per_class;
    std::vector<Matrix> tokens;
    for (std::size_t i = 0; i < n_samples; ++i) {
        Matrix t(spec.n_x, spec.d_v);
        for (double& v : t.data) v = read_f32(is);
        tokens.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < n_samples; ++i) {
        Sample s;
        s.class_id = read_u32(is);
        s.split = ds.is_base_class(s.class_id) ? SplitTag::base : SplitTag::novel;
        s.image_tokens = std::move(tokens[i]);
        ds.samples.push_back(std::move(s));
    }
    if (!is) throw std::runtime_error("load_dataset: truncated file " + path);
    return ds;
}

}  // namespace gpe
