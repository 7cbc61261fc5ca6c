#include "gpe/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <vector>

namespace gpe {

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

namespace {

struct Writer {
    std::vector<unsigned char> buf;
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f32(double v) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(bits);
    }
    void matrix(const Matrix& m) {
        u32(static_cast<std::uint32_t>(m.rows));
        u32(static_cast<std::uint32_t>(m.cols));
        for (double v : m.data) f32(v);
    }
};

struct Reader {
    const unsigned char* p;
    const unsigned char* end;
    std::uint32_t u32() {
        if (p + 4 > end) throw CheckpointError("checkpoint: truncated file");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    double f32() {
        std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return static_cast<double>(f);
    }
    Matrix matrix() {
        const std::size_t rows = u32(), cols = u32();
        if (rows * cols > (1u << 26)) throw CheckpointError("checkpoint: implausible array size");
        Matrix m(rows, cols);
        for (double& v : m.data) v = f32();
        return m;
    }
};

void write_prompts(Writer& w, const PromptSet& p) {
    w.u32(p.modality == Modality::vision ? 0 : 1);
    w.matrix(p.group1);
    w.matrix(p.group2);
    w.matrix(p.auxiliary);
}

PromptSet read_prompts(Reader& r) {
    PromptSet p;
    p.modality = r.u32() == 0 ? Modality::vision : Modality::text;
    p.group1 = r.matrix();
    p.group2 = r.matrix();
    p.auxiliary = r.matrix();
    return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderWeights& weights,
                     const PromptSet& vis_prompts, const PromptSet& txt_prompts) {
    Writer w;
    w.buf = {'G', 'P', 'E', '1'};
    w.u32(kCheckpointVersion);
    const EncoderConfig& c = weights.cfg;
    for (std::size_t v : {c.d_v, c.d_t, c.d_joint, c.layers, c.heads, c.mlp_ratio, c.vocab,
                          c.n_x, c.n_y})
        w.u32(static_cast<std::uint32_t>(v));
    w.u32(c.text_variant == LayoutVariant::special_first ? 0 : 1);
    w.f32(c.eps);
    w.f32(weights.tau);
    EncoderWeights& mut = const_cast<EncoderWeights&>(weights);
    for (const Matrix* m : weight_pointers(mut)) w.matrix(*m);
    write_prompts(w, vis_prompts);
    write_prompts(w, txt_prompts);
    const std::uint32_t crc = crc32(w.buf.data(), w.buf.size());
    w.u32(crc);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("save_checkpoint: cannot open " + path);
    os.write(reinterpret_cast<const char*>(w.buf.data()),
             static_cast<std::streamsize>(w.buf.size()));
    if (!os) throw CheckpointError("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("load_checkpoint: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 12) throw CheckpointError("load_checkpoint: truncated file " + path);
    if (std::memcmp(buf.data(), "GPE1", 4) != 0)
        throw CheckpointError("load_checkpoint: bad magic in " + path);
    const std::size_t payload = buf.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(buf[payload + i]) << (8 * i);
    if (crc32(buf.data(), payload) != stored)
        throw CheckpointError("load_checkpoint: CRC mismatch (corrupt file) " + path);

    Reader r{buf.data() + 4, buf.data() + payload};
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError("load_checkpoint: unsupported version " + std::to_string(version));
    LoadedCheckpoint out;
    EncoderConfig& c = out.weights.cfg;
    c.d_v = r.u32();
    c.d_t = r.u32();
    c.d_joint = r.u32();
    c.layers = r.u32();
    c.heads = r.u32();
    c.mlp_ratio = r.u32();
    c.vocab = r.u32();
    c.n_x = r.u32();
    c.n_y = r.u32();
    c.text_variant = r.u32() == 0 ? LayoutVariant::special_first : LayoutVariant::eos_last;
    c.eps = r.f32();
    out.weights.tau = r.f32();
    out.weights.vision.layers.resize(c.layers);
    out.weights.text.layers.resize(c.layers);
    for (Matrix* m : weight_pointers(out.weights)) *m = r.matrix();
    out.vis_prompts = read_prompts(r);
    out.txt_prompts = read_prompts(r);
    if (r.p != r.end) throw CheckpointError("load_checkpoint: trailing bytes in " + path);
    return out;
}

}  // namespace gpe
