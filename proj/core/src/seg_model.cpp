#include "damseg/seg_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "damseg/binary_io.hpp"
#include "damseg/errors.hpp"
#include "damseg/rng.hpp"

namespace damseg::seg {

void SegConfig::validate() const {
    if (image_size == 0 || patch_size == 0 || embed_dim == 0 || blocks == 0 || heads == 0 ||
        classes < 2 || mlp_ratio == 0) {
        throw ParameterError("SegConfig: extents must be positive and classes >= 2");
    }
    if (image_size % patch_size != 0) {
        throw ParameterError("SegConfig: image_size " + std::to_string(image_size) +
                             " is not divisible by patch_size " + std::to_string(patch_size));
    }
    if (embed_dim % heads != 0) {
        throw ParameterError("SegConfig: embed_dim " + std::to_string(embed_dim) +
                             " is not divisible by heads " + std::to_string(heads));
    }
    if (use_memory && memory_slots == 0) throw ParameterError("SegConfig: memory_slots must be >= 1");
}

const Tensor& SegModel::param(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return p.value;
    }
    throw ParameterError("SegModel: no parameter named '" + name + "'");
}

std::vector<Tensor> SegModel::trainable() const {
    std::vector<Tensor> out;
    for (const auto& p : params) out.push_back(p.value);
    for (std::size_t b = 0; b < memories.size(); ++b) {
        out.push_back(memories[b].xi);
        out.push_back(memories[b].w_k);
        out.push_back(query_proj[b]);
    }
    return out;
}

namespace {

Tensor copy_of(const Tensor& t, bool keep_grad_flag) {
    Tensor c = t.detach();
    if (keep_grad_flag && t.requires_grad()) c.set_requires_grad(true);
    return c;
}

SegModel copy_model(const SegModel& m, bool keep_grad_flag) {
    SegModel out;
    out.config = m.config;
    for (const auto& p : m.params) out.params.push_back({p.name, copy_of(p.value, keep_grad_flag)});
    for (const auto& mem : m.memories) {
        out.memories.push_back({copy_of(mem.xi, keep_grad_flag), copy_of(mem.w_k, keep_grad_flag)});
    }
    for (const auto& q : m.query_proj) out.query_proj.push_back(copy_of(q, keep_grad_flag));
    return out;
}

Tensor random_tensor(Shape shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_mut()) v = rng.normal(0.0, stddev);
    return t;
}

std::string block_name(std::size_t b, const char* suffix) { return "block" + std::to_string(b) + "." + suffix; }

}  // namespace

SegModel SegModel::frozen() const { return copy_model(*this, false); }

SegModel SegModel::clone() const { return copy_model(*this, true); }

SegModel init_model(const SegConfig& config, std::uint64_t seed, memory::InitScheme memory_init) {
    config.validate();
    const std::size_t d = config.embed_dim, p2 = config.patch_size * config.patch_size;
    const std::size_t hidden = config.mlp_ratio * d;
    const auto inv_sqrt = [](std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };

    SegModel model;
    model.config = config;
    Rng rng(split_seed(seed, 1));
    auto add = [&](std::string name, Tensor t) { model.params.push_back({std::move(name), std::move(t)}); };

    add("embed.w", random_tensor({p2, d}, inv_sqrt(p2), rng));
    add("embed.b", Tensor({d}));
    add("embed.pos", random_tensor({config.tokens() * d}, 0.1, rng));
    for (std::size_t b = 0; b < config.blocks; ++b) {
        add(block_name(b, "ln1.g"), Tensor({d}, 1.0));
        add(block_name(b, "ln1.b"), Tensor({d}));
        add(block_name(b, "attn.w_qkv"), random_tensor({d, 3 * d}, inv_sqrt(d), rng));
        add(block_name(b, "attn.b_qkv"), Tensor({3 * d}));
        add(block_name(b, "attn.w_o"), random_tensor({d, d}, inv_sqrt(d), rng));
        add(block_name(b, "attn.b_o"), Tensor({d}));
        add(block_name(b, "ln2.g"), Tensor({d}, 1.0));
        add(block_name(b, "ln2.b"), Tensor({d}));
        add(block_name(b, "mlp.w1"), random_tensor({d, hidden}, inv_sqrt(d), rng));
        add(block_name(b, "mlp.b1"), Tensor({hidden}));
        add(block_name(b, "mlp.w2"), random_tensor({hidden, d}, inv_sqrt(hidden), rng));
        add(block_name(b, "mlp.b2"), Tensor({d}));
    }
    add("head.ln.g", Tensor({d}, 1.0));
    add("head.ln.b", Tensor({d}));
    add("head.w", random_tensor({d, p2 * config.classes}, inv_sqrt(d), rng));
    add("head.b", Tensor({p2 * config.classes}));

    if (config.use_memory) {
        for (std::size_t b = 0; b < config.blocks; ++b) {
            model.memories.push_back(
                memory::init_static_memory(config.memory_slots, d, split_seed(seed, 1000 + b), memory_init));
            Rng q_rng(split_seed(seed, 2000 + b));
            model.query_proj.push_back(random_tensor({d, d}, inv_sqrt(d), q_rng));
        }
    }
    for (auto& t : model.trainable()) t.set_requires_grad(true);
    return model;
}

Tensor stack_images(std::span<const SyntheticSample* const> samples) {
    if (samples.empty()) throw DimensionError("stack_images: empty batch");
    const std::size_t h = samples.front()->height, w = samples.front()->width;
    std::vector<double> values;
    values.reserve(samples.size() * h * w);
    for (const auto* s : samples) {
        if (s->height != h || s->width != w) throw DimensionError("stack_images: mixed image sizes");
        values.insert(values.end(), s->image.begin(), s->image.end());
    }
    return Tensor({samples.size(), h, w}, std::move(values));
}

Tensor forward_logits(const SegModel& model, const Tensor& images) {
    const SegConfig& cfg = model.config;
    if (images.rank() != 3 || images.dim(1) != cfg.image_size || images.dim(2) != cfg.image_size) {
        throw DimensionError("forward_seg: images " + shape_to_string(images.shape()) + " for image_size " +
                             std::to_string(cfg.image_size));
    }
    const std::size_t batch = images.dim(0), g = cfg.grid(), p = cfg.patch_size;
    const std::size_t tokens = cfg.tokens(), d = cfg.embed_dim;
    const std::size_t heads = cfg.heads, dh = d / heads;
    const std::size_t rows = batch * tokens;
    const auto& P = [&](const std::string& name) -> const Tensor& { return model.param(name); };

    // Patch embedding plus learned positions.
    Tensor x = reshape(images, {batch, g, p, g, p});
    x = reshape(permute(x, {0, 1, 3, 2, 4}), {rows, p * p});
    x = add_row(matmul(x, P("embed.w")), P("embed.b"));
    x = reshape(add_row(reshape(x, {batch, tokens * d}), P("embed.pos")), {rows, d});

    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const Tensor h = layer_norm_rows(x, P(block_name(b, "ln1.g")), P(block_name(b, "ln1.b")));
        Tensor qkv = add_row(matmul(h, P(block_name(b, "attn.w_qkv"))), P(block_name(b, "attn.b_qkv")));
        qkv = permute(reshape(qkv, {batch, tokens, 3, heads, dh}), {2, 0, 3, 1, 4});
        qkv = reshape(qkv, {3 * batch * heads, tokens, dh});
        const std::size_t bh = batch * heads;
        const Tensor q = slice_leading(qkv, 0, bh);
        const Tensor k = slice_leading(qkv, bh, bh);
        const Tensor v = slice_leading(qkv, 2 * bh, bh);
        const Tensor att = softmax_rows(scale(bmm_nt(q, k), attn_scale));
        Tensor ctx = reshape(bmm(att, v), {batch, heads, tokens, dh});
        ctx = reshape(permute(ctx, {0, 2, 1, 3}), {rows, d});
        x = add(x, add_row(matmul(ctx, P(block_name(b, "attn.w_o"))), P(block_name(b, "attn.b_o"))));

        const Tensor h2 = layer_norm_rows(x, P(block_name(b, "ln2.g")), P(block_name(b, "ln2.b")));
        const Tensor hidden = gelu(add_row(matmul(h2, P(block_name(b, "mlp.w1"))), P(block_name(b, "mlp.b1"))));
        x = add(x, add_row(matmul(hidden, P(block_name(b, "mlp.w2"))), P(block_name(b, "mlp.b2"))));

        if (cfg.use_memory) {
            const Tensor queries = matmul(x, model.query_proj.at(b));
            x = add(x, memory::dam_forward(model.memories.at(b), queries));
        }
    }

    Tensor out = layer_norm_rows(x, P("head.ln.g"), P("head.ln.b"));
    out = add_row(matmul(out, P("head.w")), P("head.b"));
    out = reshape(out, {batch, g, g, p, p, cfg.classes});
    out = permute(out, {0, 1, 3, 2, 4, 5});
    return reshape(out, {batch * cfg.image_size * cfg.image_size, cfg.classes});
}

Tensor forward_seg(const SegModel& model, const SyntheticSample& sample) {
    const SyntheticSample* one[] = {&sample};
    const Tensor logits = forward_logits(model, stack_images(one));
    return reshape(logits, {sample.height, sample.width, model.config.classes});
}

std::vector<int> predict(const SegModel& model, const SyntheticSample& sample) {
    const Tensor scores = forward_seg(model.frozen(), sample);
    const std::size_t classes = model.config.classes;
    const std::size_t pixels = sample.height * sample.width;
    std::vector<int> labels(pixels);
    auto v = scores.data();
    for (std::size_t i = 0; i < pixels; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (v[i * classes + c] > v[i * classes + best]) best = c;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

Tensor segmentation_loss(const Tensor& logits, std::span<const int> labels, std::size_t classes) {
    constexpr double kSmooth = 1.0;
    const std::size_t rows = logits.dim(0);
    std::vector<double> onehot(rows * classes, 0.0);
    for (std::size_t r = 0; r < rows; ++r) onehot[r * classes + static_cast<std::size_t>(labels[r])] = 1.0;
    const Tensor target({rows, classes}, std::move(onehot));

    const Tensor probs = softmax_rows(logits);
    const Tensor inter = sum_rows(mul(probs, target));
    const Tensor denom = add_scalar(add(sum_rows(probs), sum_rows(target)), kSmooth);
    const Tensor dice = div(add_scalar(scale(inter, 2.0), kSmooth), denom);
    const Tensor ce = cross_entropy(logits, labels);
    return add(ce, add_scalar(scale(mean(dice), -1.0), 1.0));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void write_section(std::ostream& out, const char tag[4], const std::string& payload) {
    out.write(tag, 4);
    io::write_u64(out, payload.size());
    io::write_bytes(out, payload);
}

void write_named(std::ostream& out, const std::string& name, const Tensor& t) {
    io::write_u32(out, static_cast<std::uint32_t>(name.size()));
    io::write_bytes(out, name);
    io::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) io::write_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.data()) io::write_f64(out, v);
}

NamedTensor read_named(std::istream& in) {
    NamedTensor nt;
    nt.name = io::read_bytes(in, io::read_u32(in));
    Shape shape(io::read_u32(in));
    for (auto& e : shape) e = io::read_u32(in);
    Tensor t(shape);
    for (auto& v : t.data_mut()) v = io::read_f64(in);
    nt.value = std::move(t);
    return nt;
}

}  // namespace

void save_checkpoint(std::ostream& out, const SegModel& model) {
    const SegConfig& c = model.config;
    out.write(memory::kWeightsMagic, 4);
    io::write_u16(out, kCheckpointVersion);
    io::write_u32(out, static_cast<std::uint32_t>(2 + model.memories.size()));

    std::ostringstream cfg;
    for (auto v : {c.image_size, c.patch_size, c.embed_dim, c.blocks, c.heads, c.classes, c.memory_slots,
                   c.mlp_ratio, static_cast<std::size_t>(c.use_memory)}) {
        io::write_u32(cfg, static_cast<std::uint32_t>(v));
    }
    write_section(out, "SCFG", cfg.str());

    std::ostringstream trfm;
    io::write_u32(trfm, static_cast<std::uint32_t>(model.params.size() + model.query_proj.size()));
    for (const auto& p : model.params) write_named(trfm, p.name, p.value);
    for (std::size_t b = 0; b < model.query_proj.size(); ++b) {
        write_named(trfm, block_name(b, "mem.w_q"), model.query_proj[b]);
    }
    write_section(out, "TRFM", trfm.str());

    for (const auto& mem : model.memories) {
        std::ostringstream blob;
        memory::save_static_memory(blob, mem);
        write_section(out, "DAMW", blob.str());
    }
    if (!out) throw FormatError("checkpoint: write failed");
}

SegModel load_checkpoint(std::istream& in) {
    if (io::read_bytes(in, 4) != std::string(memory::kWeightsMagic, 4)) throw FormatError("checkpoint: bad magic");
    const auto version = io::read_u16(in);
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto sections = io::read_u32(in);
    SegModel model;
    bool have_config = false;
    for (std::uint32_t s = 0; s < sections; ++s) {
        const std::string tag = io::read_bytes(in, 4);
        const auto length = io::read_u64(in);
        std::istringstream payload(io::read_bytes(in, length));
        if (tag == "SCFG") {
            SegConfig& c = model.config;
            c.image_size = io::read_u32(payload);
            c.patch_size = io::read_u32(payload);
            c.embed_dim = io::read_u32(payload);
            c.blocks = io::read_u32(payload);
            c.heads = io::read_u32(payload);
            c.classes = io::read_u32(payload);
            c.memory_slots = io::read_u32(payload);
            c.mlp_ratio = io::read_u32(payload);
            c.use_memory = io::read_u32(payload) != 0;
            have_config = true;
        } else if (tag == "TRFM") {
            const auto count = io::read_u32(payload);
            for (std::uint32_t i = 0; i < count; ++i) {
                auto nt = read_named(payload);
                if (nt.name.ends_with(".mem.w_q")) {
                    model.query_proj.push_back(std::move(nt.value));
                } else {
                    model.params.push_back(std::move(nt));
                }
            }
        } else if (tag == "DAMW") {
            model.memories.push_back(memory::load_static_memory(payload));
        }
        // Unknown sections are skipped.
    }
    if (!have_config) throw FormatError("checkpoint: missing SCFG section");
    model.config.validate();
    if (model.config.use_memory &&
        (model.memories.size() != model.config.blocks || model.query_proj.size() != model.config.blocks)) {
        throw FormatError("checkpoint: memory sections do not match the block count");
    }
    for (auto& t : model.trainable()) t.set_requires_grad(true);
    return model;
}

void save_checkpoint(const std::string& path, const SegModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("checkpoint: cannot write " + path);
    save_checkpoint(out, model);
}

SegModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path);
    return load_checkpoint(in);
}

}  // namespace damseg::seg
