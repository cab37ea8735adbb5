#pragma once

// Patch-transformer segmenter with an optional static-memory module per
// block: block_i output <- block_i(x) + dam(mem_i, x W_q_i).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "damseg/static_memory.hpp"
#include "damseg/synthetic_data.hpp"
#include "damseg/tensor.hpp"

namespace damseg::seg {

struct SegConfig {
    std::size_t image_size = 32;
    std::size_t patch_size = 4;
    std::size_t embed_dim = 64;
    std::size_t blocks = 4;
    std::size_t heads = 4;
    std::size_t classes = kSyntheticClasses;
    std::size_t memory_slots = 8;
    std::size_t mlp_ratio = 2;
    bool use_memory = true;

    std::size_t grid() const { return image_size / patch_size; }
    std::size_t tokens() const { return grid() * grid(); }
    /// Throws ParameterError on indivisible sizes or zero extents.
    void validate() const;
};

struct NamedTensor {
    std::string name;
    Tensor value;
};

struct SegModel {
    SegConfig config;
    /// Transformer, embedding and head parameters, in a fixed order.
    std::vector<NamedTensor> params;
    /// One static memory and query projection per block (empty without memory).
    std::vector<memory::StaticMemory> memories;
    std::vector<Tensor> query_proj;

    const Tensor& param(const std::string& name) const;
    /// Every trainable tensor: params, then per block xi, W_k, W_q.
    std::vector<Tensor> trainable() const;
    /// Deep copy with no gradient tracking.
    SegModel frozen() const;
    /// Deep copy that keeps the requires_grad flags.
    SegModel clone() const;
};

/// Transformer parameters depend only on the seed, never on use_memory, so
/// the memory ablation starts from identical backbones.
SegModel init_model(const SegConfig& config, std::uint64_t seed,
                    memory::InitScheme memory_init = memory::InitScheme::near_orthogonal);

/// Stacks images [B x H x W] into a constant tensor.
Tensor stack_images(std::span<const SyntheticSample* const> samples);

/// Per-pixel class logits for a batch, shape [B*H*W x classes], pixels in
/// row-major order per image. Throws DimensionError on a size mismatch.
Tensor forward_logits(const SegModel& model, const Tensor& images);

/// Scores for one image, shape [H x W x classes].
Tensor forward_seg(const SegModel& model, const SyntheticSample& sample);

/// Argmax labels per pixel.
std::vector<int> predict(const SegModel& model, const SyntheticSample& sample);

/// Mean per-pixel cross-entropy plus (1 - mean soft Dice over classes).
Tensor segmentation_loss(const Tensor& logits, std::span<const int> labels, std::size_t classes);

// Checkpoint: "DAMW", u16 version 2, u32 section count, then sections of
// [4-byte tag][u64 length][payload]. Tags: SCFG (config), TRFM (named
// tensors), and one DAMW section per block holding a version-1 weight file.
inline constexpr std::uint16_t kCheckpointVersion = 2;

void save_checkpoint(std::ostream& out, const SegModel& model);
SegModel load_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const SegModel& model);
SegModel load_checkpoint(const std::string& path);

}  // namespace damseg::seg
