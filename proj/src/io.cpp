#include "ancl/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ancl {

namespace {
constexpr char kCheckpointMagic[] = "ANCLCK1";
constexpr const char* kPoolLabelsName = "pool.labels";

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("checkpoint truncated");
    return v;
}
}  // namespace

const Mat* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, m] : matrices)
        if (n == name) return &m;
    return nullptr;
}

const Mat& Checkpoint::require(const std::string& name) const {
    const Mat* m = find(name);
    if (!m) throw IoError("checkpoint is missing matrix: " + name);
    return *m;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint format is little-endian");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(kCheckpointMagic, 7);
    auto write_header = [&](const std::string& name, Eigen::Index r, Eigen::Index c) {
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(r));
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(c));
    };
    for (const auto& [name, m] : ck.matrices) {
        if (name == kPoolLabelsName) throw IoError("matrix name reserved for labels");
        write_header(name, m.rows(), m.cols());
        f.write(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
    }
    if (ck.has_pool_labels) {
        write_header(kPoolLabelsName, static_cast<Eigen::Index>(ck.pool_labels.size()), 1);
        f.write(reinterpret_cast<const char*>(ck.pool_labels.data()),
                sizeof(std::int32_t) * ck.pool_labels.size());
    }
    if (!f) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    char magic[7];
    f.read(magic, 7);
    if (!f || std::memcmp(magic, kCheckpointMagic, 7) != 0)
        throw IoError("not a checkpoint file (bad magic): " + path);
    Checkpoint ck;
    while (true) {
        std::uint32_t name_len;
        f.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
        if (f.eof()) break;
        if (!f || name_len > 4096) throw IoError("corrupt checkpoint record: " + path);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const auto rows = read_pod<std::uint32_t>(f);
        const auto cols = read_pod<std::uint32_t>(f);
        if (name == kPoolLabelsName) {
            ck.pool_labels.resize(rows);
            f.read(reinterpret_cast<char*>(ck.pool_labels.data()),
                   sizeof(std::int32_t) * rows);
            ck.has_pool_labels = true;
        } else {
            Mat m(rows, cols);
            f.read(reinterpret_cast<char*>(m.data()), sizeof(double) * m.size());
            ck.matrices.emplace_back(std::move(name), std::move(m));
        }
        if (!f) throw IoError("checkpoint truncated: " + path);
    }
    return ck;
}

Checkpoint pack_train_state(const Model& model, const SgdBuffers* buffers,
                            const TargetModel* target, const TargetPool* pool) {
    Checkpoint ck;
    ck.matrices.emplace_back("model.W_enc", model.W_enc);
    ck.matrices.emplace_back("model.W_proj", model.W_proj);
    ck.matrices.emplace_back("model.W_pred", model.W_pred);
    if (buffers) {
        ck.matrices.emplace_back("optim.buf_enc", buffers->enc);
        ck.matrices.emplace_back("optim.buf_proj", buffers->proj);
        ck.matrices.emplace_back("optim.buf_pred", buffers->pred);
    }
    if (target) {
        ck.matrices.emplace_back("target.W_enc", target->W_enc);
        ck.matrices.emplace_back("target.W_proj", target->W_proj);
    }
    if (pool) {
        if (pool->variant() == PoolVariant::kLearnablePrototypes) {
            ck.matrices.emplace_back("pool.prototypes", pool->prototypes());
            Mat counts(1, static_cast<Eigen::Index>(pool->prototype_counts().size()));
            for (Eigen::Index i = 0; i < counts.cols(); ++i)
                counts(0, i) = static_cast<double>(pool->prototype_counts()[i]);
            ck.matrices.emplace_back("pool.prototype_counts", counts);
        } else {
            ck.matrices.emplace_back("pool.entries", pool->entries());
            ck.pool_labels = pool->labels();
            ck.has_pool_labels = true;
        }
    }
    return ck;
}

Model unpack_model(const Checkpoint& ck) {
    Model m;
    m.W_enc = ck.require("model.W_enc");
    m.W_proj = ck.require("model.W_proj");
    m.W_pred = ck.require("model.W_pred");
    m.check_finite();
    return m;
}

std::string metrics_to_json(const MetricsRecord& rec) {
    nlohmann::json j{{"epoch", rec.epoch},       {"ell_ssl", rec.ell_ssl},
                     {"ell_sup", rec.ell_sup},   {"total", rec.total},
                     {"Sw_tilde", rec.Sw_tilde}, {"St_tilde", rec.St_tilde},
                     {"ratio", rec.ratio},       {"collapse_flag", rec.collapse_flag}};
    return j.dump();
}

}  // namespace ancl
