#include "tabmoe/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tabmoe/errors.hpp"
#include "tabmoe/json_io.hpp"

namespace tabmoe {
namespace {

constexpr char kMagic[8] = {'T', 'A', 'B', 'M', 'O', 'E', '0', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void append_f64_le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_u64_le(out, bits);
}

double read_f64_le(const unsigned char* p) {
    const std::uint64_t bits = get_u64_le(p);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed) {
    nlohmann::json header;
    header["format"] = "tabmoe-checkpoint";
    header["config"] = params.config.to_json();
    header["seed"] = seed;
    header["model_input_width"] = params.model_input_width;
    header["ple_widths"] = params.ple_widths;
    header["param_count"] = params.scalar_count();
    const std::string header_text = jsonio::dump(header);

    std::string blob;
    blob.append(kMagic, sizeof kMagic);
    put_u64_le(blob, header_text.size());
    blob += header_text;
    for (const Tensor* t : params.tensors()) {
        for (double v : t->span()) append_f64_le(blob, v);
    }
    jsonio::write_file_atomic(path, blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open checkpoint " + path.string());
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
        throw ValidationError("not a tabmoe checkpoint: " + path.string());
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
    const std::uint64_t header_len = get_u64_le(bytes + 8);
    if (blob.size() < 16 + header_len) {
        throw ValidationError("truncated checkpoint header: " + path.string());
    }

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(blob.substr(16, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad checkpoint header: " + std::string(e.what()));
    }

    Checkpoint ckpt;
    try {
        ckpt.params.config = ModelConfig::from_json(header.at("config"));
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        ckpt.params.model_input_width = header.at("model_input_width").get<std::size_t>();
        ckpt.params.ple_widths = header.at("ple_widths").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad checkpoint header: " + std::string(e.what()));
    }

    // rebuild tensor shapes from the header, then fill from the payload
    const ModelConfig& config = ckpt.params.config;
    config.validate();
    ModelParams& params = ckpt.params;
    if (config.embedding) {
        for (std::size_t w : params.ple_widths) {
            params.embedding.push_back(
                LinearParams{Tensor({w, config.embedding->d_embedding}),
                             Tensor({config.embedding->d_embedding})});
        }
    }
    const std::size_t m_prime = params.model_input_width;
    const std::size_t k = config.num_experts();
    const std::size_t width = config.expert_width();
    const std::size_t out_w = config.task.output_width();
    for (std::size_t e = 0; e < k; ++e) {
        ExpertParams expert;
        std::size_t in = m_prime;
        for (std::size_t b = 0; b < config.n_blocks; ++b) {
            expert.blocks.push_back(LinearParams{Tensor({in, width}), Tensor({width})});
            in = width;
        }
        expert.head = LinearParams{Tensor({in, out_w}), Tensor({out_w})};
        params.experts.push_back(std::move(expert));
    }
    if (config.is_moe()) {
        params.gate = LinearParams{Tensor({m_prime, k}), Tensor({k})};
    }

    const std::size_t declared = header.at("param_count").get<std::size_t>();
    if (declared != params.scalar_count()) {
        throw ValidationError("checkpoint param_count " + std::to_string(declared) +
                              " does not match rebuilt shapes " +
                              std::to_string(params.scalar_count()));
    }
    const std::size_t payload_bytes = params.scalar_count() * sizeof(double);
    if (blob.size() != 16 + header_len + payload_bytes) {
        throw ValidationError("checkpoint payload size mismatch in " + path.string());
    }

    const unsigned char* cursor = bytes + 16 + header_len;
    for (ParamRef ref : params.param_refs()) {
        for (std::size_t i = 0; i < ref.tensor->size(); ++i) {
            (*ref.tensor)[i] = read_f64_le(cursor);
            cursor += sizeof(double);
        }
    }
    return ckpt;
}

} // namespace tabmoe
