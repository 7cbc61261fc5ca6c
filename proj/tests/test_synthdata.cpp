#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "doctest.h"
#include "gpe/numeric.hpp"
#include "gpe/synthdata.hpp"

using namespace gpe;

namespace {

std::size_t nearest_prototype(const Dataset& ds, const Matrix& image_tokens) {
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t c = 0; c < ds.prototypes.size(); ++c) {
        double sim = 0.0;
        for (std::size_t i = 0; i < image_tokens.rows; ++i)
            sim += cosine_similarity(image_tokens.row(i), ds.prototypes[c].row(i));
        if (sim > best_sim) {
            best_sim = sim;
            best = c;
        }
    }
    return best;
}

std::string temp_path(const char* name) {
    return std::string("gpe_test_") + name + ".bin";
}

}  // namespace

TEST_CASE("generate_task determinism and split structure") {
    TaskSpec spec;
    Dataset a = generate_task(spec);
    Dataset b = generate_task(spec);
    REQUIRE(a.samples.size() == spec.n_classes * spec.samples_per_class);
    CHECK(a.base_class_count == 4);  // ceil(0.5 * 8)
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].class_id == b.samples[i].class_id);
        for (std::size_t j = 0; j < a.samples[i].image_tokens.size(); ++j)
            CHECK(a.samples[i].image_tokens.data[j] == b.samples[i].image_tokens.data[j]);
    }
    TaskSpec other = spec;
    other.seed = 43;
    Dataset c = generate_task(other);
    CHECK(c.samples[0].image_tokens.data[0] != a.samples[0].image_tokens.data[0]);

    for (const Sample& s : a.samples)
        CHECK((s.split == SplitTag::base) == (s.class_id < a.base_class_count));
}

TEST_CASE("prototype rows are unit norm and samples cluster around them") {
    TaskSpec spec;
    Dataset ds = generate_task(spec);
    for (const Matrix& p : ds.prototypes)
        for (std::size_t i = 0; i < p.rows; ++i) {
            double n = 0.0;
            for (std::size_t j = 0; j < p.cols; ++j) n += p(i, j) * p(i, j);
            CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-12);
        }

    std::size_t hits = 0;
    for (const Sample& s : ds.samples)
        if (nearest_prototype(ds, s.image_tokens) == s.class_id) ++hits;
    // at sigma=0.25 the task is nearly separable by design
    CHECK(static_cast<double>(hits) / static_cast<double>(ds.samples.size()) >= 0.99);
}

TEST_CASE("base fraction edge cases and validation") {
    TaskSpec spec;
    spec.n_classes = 5;
    spec.base_fraction = 0.5;
    CHECK(generate_task(spec).base_class_count == 3);  // ceil(2.5)

    TaskSpec bad = spec;
    bad.n_classes = 3;
    CHECK_THROWS_AS(generate_task(bad), DomainError);
    TaskSpec vocab_bad = spec;
    vocab_bad.n_classes = 64;
    vocab_bad.vocab = 64;  // 64 + 1 reserved > 64
    CHECK_THROWS_AS(generate_task(vocab_bad), DomainError);
}

TEST_CASE("class token sequences") {
    TaskSpec spec;
    Dataset ds = generate_task(spec);
    std::vector<std::size_t> ids = ds.class_token_sequence(3, 8);
    REQUIRE(ids.size() == 8);
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) CHECK(ids[i] == kTemplateTokenId);
    CHECK(ids.back() == kReservedTokenIds + 3);
    CHECK(ds.class_token_id(0) == 1);
}

TEST_CASE("few_shot_sample counts, split purity, and determinism") {
    TaskSpec spec;
    Dataset ds = generate_task(spec);
    const std::size_t shots = 16;
    std::vector<std::size_t> idx = few_shot_sample(ds, shots, 42);
    REQUIRE(idx.size() == shots * ds.base_class_count);

    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == idx.size());  // no repeats
    std::vector<std::size_t> per_class(ds.spec.n_classes, 0);
    for (std::size_t i : idx) {
        CHECK(ds.samples[i].split == SplitTag::base);
        ++per_class[ds.samples[i].class_id];
    }
    for (std::size_t c = 0; c < ds.base_class_count; ++c) CHECK(per_class[c] == shots);

    std::vector<std::size_t> again = few_shot_sample(ds, shots, 42);
    CHECK(again == idx);
    std::vector<std::size_t> other = few_shot_sample(ds, shots, 43);
    CHECK(other != idx);

    CHECK_THROWS_AS(few_shot_sample(ds, spec.samples_per_class + 1, 42), DomainError);
}

TEST_CASE("dataset save/load round trip") {
    TaskSpec spec;
    spec.n_classes = 4;
    spec.samples_per_class = 6;
    spec.n_x = 3;
    spec.d_v = 5;
    Dataset ds = generate_task(spec);
    const std::string path = temp_path("dataset_rt");
    save_dataset(path, ds);
    Dataset rt = load_dataset(path);

    CHECK(rt.spec.n_classes == spec.n_classes);
    CHECK(rt.spec.n_x == spec.n_x);
    CHECK(rt.spec.d_v == spec.d_v);
    CHECK(rt.spec.samples_per_class == spec.samples_per_class);
    CHECK(rt.spec.seed == spec.seed);
    CHECK(rt.spec.vocab == spec.vocab);
    CHECK(rt.base_class_count == ds.base_class_count);
    REQUIRE(rt.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(rt.samples[i].class_id == ds.samples[i].class_id);
        CHECK(rt.samples[i].split == ds.samples[i].split);
        for (std::size_t j = 0; j < ds.samples[i].image_tokens.size(); ++j)
            CHECK(rt.samples[i].image_tokens.data[j] ==
                  doctest::Approx(ds.samples[i].image_tokens.data[j]).epsilon(1e-7));
    }
    // saving the loaded copy reproduces the bytes (f32 round trip idempotent)
    const std::string path2 = temp_path("dataset_rt2");
    save_dataset(path2, rt);
    std::FILE* f1 = std::fopen(path.c_str(), "rb");
    std::FILE* f2 = std::fopen(path2.c_str(), "rb");
    REQUIRE(f1);
    REQUIRE(f2);
    int c1, c2;
    do {
        c1 = std::fgetc(f1);
        c2 = std::fgetc(f2);
        CHECK(c1 == c2);
    } while (c1 != EOF && c2 != EOF);
    std::fclose(f1);
    std::fclose(f2);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("load_dataset rejects bad magic") {
    const std::string path = temp_path("dataset_bad");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NOTDATA v9, 1, 2, 3\n", f);
    std::fclose(f);
    CHECK_THROWS(load_dataset(path));
    std::remove(path.c_str());
}
