#include "unirep/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "unirep/error.hpp"

namespace unirep {

namespace {

constexpr char kMagic[4] = {'U', 'D', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("checkpoint: cannot write '" + path + "'");
  }
  void raw(const void* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void floats(const float* p, std::size_t n) { raw(p, n * sizeof(float)); }
  void tensor(const Tensor4& t) {
    u64(t.rows());
    u64(t.cols());
    u64(t.channels());
    u64(t.batch());
    floats(t.data(), t.size());
  }
  void fvec(const std::vector<float>& v) {
    u64(v.size());
    floats(v.data(), v.size());
  }
  void done(const std::string& path) {
    out_.flush();
    if (!out_) throw IoError("checkpoint: write failure on '" + path + "'");
  }

private:
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("checkpoint: cannot open '" + path + "'");
  }
  void raw(void* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError("checkpoint: truncated file", offset_);
    offset_ += n;
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Tensor4 tensor() {
    const std::size_t h = u64(), w = u64(), c = u64(), t = u64();
    Tensor4 out(h, w, c, t);
    raw(out.data(), out.size() * sizeof(float));
    return out;
  }
  std::vector<float> fvec() {
    std::vector<float> v(u64());
    raw(v.data(), v.size() * sizeof(float));
    return v;
  }
  std::size_t offset() const { return offset_; }

private:
  std::ifstream in_;
  std::size_t offset_ = 0;
};

void write_scale_grad(Writer& w, const ScaleGradT<float>& g) {
  w.u64(g.ds.size());
  w.floats(g.ds.data(), g.ds.size());
  w.floats(g.db.data(), g.db.size());
}

ScaleGradT<float> read_scale_grad(Reader& r) {
  ScaleGradT<float> g(r.u64());
  r.raw(g.ds.data(), g.ds.size() * sizeof(float));
  r.raw(g.db.data(), g.db.size() * sizeof(float));
  return g;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const TrainerState& state, std::uint64_t config_hash) {
  Writer w(path);
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u64(config_hash);

  // Structure: enough to rebuild via apply_sharing, then overwrite values.
  const Blueprint& bp = model.blueprint;
  w.str(bp.preset);
  w.u64(bp.capacity_multiplier);
  w.u8(static_cast<std::uint8_t>(bp.norm.kind));
  w.u8(static_cast<std::uint8_t>(bp.norm.scale_scope));
  w.u8(static_cast<std::uint8_t>(bp.norm.moment_scope));
  w.u64(bp.class_counts.size());
  for (std::size_t k : bp.class_counts) w.u64(k);
  w.u8(static_cast<std::uint8_t>(model.sharing.mode));
  w.u64(model.sharing.partial_first);
  w.u64(model.sharing.partial_last);
  w.u64(model.init_seed);

  w.u64(model.bank.entries.size());
  for (const auto& e : model.bank.entries) w.tensor(e.value);

  w.u64(model.sites.size());
  for (const auto& site : model.sites) {
    w.u64(site.domain_scales.size());
    for (const auto& sp : site.domain_scales) {
      w.fvec(sp.s);
      w.fvec(sp.b);
    }
    w.u8(site.shared_scale ? 1 : 0);
    if (site.shared_scale) {
      w.fvec(site.shared_scale->s);
      w.fvec(site.shared_scale->b);
    }
    w.u64(site.domain_moments.size());
    for (const auto& mp : site.domain_moments) {
      w.fvec(mp.mu);
      w.fvec(mp.sigma2);
      w.u64(mp.count);
    }
    w.u8(site.shared_moments ? 1 : 0);
    if (site.shared_moments) {
      w.fvec(site.shared_moments->mu);
      w.fvec(site.shared_moments->sigma2);
      w.u64(site.shared_moments->count);
    }
  }

  w.u64(model.class_pairing.size());
  for (const auto& perm : model.class_pairing) {
    w.u64(perm.size());
    for (int v : perm) w.u32(static_cast<std::uint32_t>(v));
  }

  // Trainer state.
  w.u64(state.step);
  w.f64(state.optimizer.config.momentum);
  w.f64(state.optimizer.config.weight_decay);
  w.u64(state.optimizer.velocity.entries.size());
  for (const auto& t : state.optimizer.velocity.entries) w.tensor(t);
  w.u64(state.optimizer.velocity.sites.size());
  for (const auto& sg : state.optimizer.velocity.sites) {
    w.u64(sg.per_domain.size());
    for (const auto& g : sg.per_domain) write_scale_grad(w, g);
    w.u8(sg.shared ? 1 : 0);
    if (sg.shared) write_scale_grad(w, *sg.shared);
  }
  w.u64(state.iterators.size());
  for (const auto& it : state.iterators) {
    w.u64(it.epoch);
    w.u64(it.pos);
  }
  w.u64(state.loss_sum.size());
  for (double v : state.loss_sum) w.f64(v);
  for (std::uint64_t v : state.loss_count) w.u64(v);
  w.done(path);
}

CheckpointData load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic bytes", 0);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);

  CheckpointData out;
  out.config_hash = r.u64();

  const std::string preset = r.str();
  const std::size_t multiplier = r.u64();
  NormStrategy norm;
  norm.kind = static_cast<NormKind>(r.u8());
  norm.scale_scope = static_cast<ParamScope>(r.u8());
  norm.moment_scope = static_cast<MomentScope>(r.u8());
  std::vector<std::size_t> class_counts(r.u64());
  for (auto& k : class_counts) k = r.u64();
  SharingConfig sharing;
  sharing.mode = static_cast<SharingMode>(r.u8());
  sharing.capacity_multiplier = multiplier;
  sharing.partial_first = r.u64();
  sharing.partial_last = r.u64();
  const std::uint64_t init_seed = r.u64();

  const Blueprint bp = build_blueprint(preset, multiplier, norm, class_counts);
  out.model = apply_sharing<float>(bp, sharing, class_counts.size(), init_seed);

  const std::size_t n_entries = r.u64();
  if (n_entries != out.model.bank.entries.size())
    throw FormatError("checkpoint: entry count " + std::to_string(n_entries) +
                          " does not match the rebuilt structure",
                      r.offset());
  for (auto& e : out.model.bank.entries) {
    Tensor4 t = r.tensor();
    if (!t.same_dims(e.value))
      throw FormatError("checkpoint: tensor dims mismatch for '" + e.name + "'",
                        r.offset());
    e.value = std::move(t);
  }

  const std::size_t n_sites = r.u64();
  if (n_sites != out.model.sites.size())
    throw FormatError("checkpoint: site count mismatch", r.offset());
  for (auto& site : out.model.sites) {
    const std::size_t nd = r.u64();
    if (nd != site.domain_scales.size())
      throw FormatError("checkpoint: per-domain scale count mismatch", r.offset());
    for (auto& sp : site.domain_scales) {
      sp.s = r.fvec();
      sp.b = r.fvec();
    }
    const bool has_shared_scale = r.u8() != 0;
    if (has_shared_scale != site.shared_scale.has_value())
      throw FormatError("checkpoint: scale scope mismatch", r.offset());
    if (site.shared_scale) {
      site.shared_scale->s = r.fvec();
      site.shared_scale->b = r.fvec();
    }
    const std::size_t nm = r.u64();
    if (nm != site.domain_moments.size())
      throw FormatError("checkpoint: per-domain moment count mismatch", r.offset());
    for (auto& mp : site.domain_moments) {
      mp.mu = r.fvec();
      mp.sigma2 = r.fvec();
      mp.count = r.u64();
    }
    const bool has_shared_moments = r.u8() != 0;
    if (has_shared_moments != site.shared_moments.has_value())
      throw FormatError("checkpoint: moment scope mismatch", r.offset());
    if (site.shared_moments) {
      site.shared_moments->mu = r.fvec();
      site.shared_moments->sigma2 = r.fvec();
      site.shared_moments->count = r.u64();
    }
  }

  const std::size_t n_pair = r.u64();
  if (n_pair != out.model.class_pairing.size())
    throw FormatError("checkpoint: class pairing count mismatch", r.offset());
  for (auto& perm : out.model.class_pairing) {
    const std::size_t k = r.u64();
    if (k != perm.size())
      throw FormatError("checkpoint: class pairing length mismatch", r.offset());
    for (auto& v : perm) v = static_cast<int>(r.u32());
  }

  TrainerState& st = out.state;
  st.step = r.u64();
  st.optimizer.config.momentum = r.f64();
  st.optimizer.config.weight_decay = r.f64();
  st.optimizer.velocity = make_grad_bank(out.model);
  const std::size_t n_vel = r.u64();
  if (n_vel != st.optimizer.velocity.entries.size())
    throw FormatError("checkpoint: velocity count mismatch", r.offset());
  for (auto& t : st.optimizer.velocity.entries) {
    Tensor4 v = r.tensor();
    if (!v.same_dims(t))
      throw FormatError("checkpoint: velocity dims mismatch", r.offset());
    t = std::move(v);
  }
  const std::size_t n_vel_sites = r.u64();
  if (n_vel_sites != st.optimizer.velocity.sites.size())
    throw FormatError("checkpoint: velocity site count mismatch", r.offset());
  for (auto& sg : st.optimizer.velocity.sites) {
    const std::size_t nd = r.u64();
    if (nd != sg.per_domain.size())
      throw FormatError("checkpoint: velocity scale count mismatch", r.offset());
    for (auto& g : sg.per_domain) g = read_scale_grad(r);
    const bool has_shared = r.u8() != 0;
    if (has_shared != sg.shared.has_value())
      throw FormatError("checkpoint: velocity scope mismatch", r.offset());
    if (sg.shared) *sg.shared = read_scale_grad(r);
  }
  st.iterators.resize(r.u64());
  for (auto& it : st.iterators) {
    it.epoch = r.u64();
    it.pos = r.u64();
  }
  st.loss_sum.resize(r.u64());
  for (auto& v : st.loss_sum) v = r.f64();
  st.loss_count.resize(st.loss_sum.size());
  for (auto& v : st.loss_count) v = r.u64();
  return out;
}

void check_compatibility(const CheckpointData& checkpoint, const Model& expected,
                         std::uint64_t config_hash, bool resume) {
  const Blueprint& a = checkpoint.model.blueprint;
  const Blueprint& b = expected.blueprint;
  if (a.preset != b.preset || a.capacity_multiplier != b.capacity_multiplier ||
      a.class_counts != b.class_counts || a.norm.kind != b.norm.kind ||
      a.norm.scale_scope != b.norm.scale_scope ||
      a.norm.moment_scope != b.norm.moment_scope ||
      checkpoint.model.sharing.mode != expected.sharing.mode)
    throw CompatibilityError(
        "checkpoint: stored blueprint/sharing does not match the config (stored " +
        a.preset + " x" + std::to_string(a.capacity_multiplier) + " " + a.norm.label() +
        ", expected " + b.preset + " x" + std::to_string(b.capacity_multiplier) + " " +
        b.norm.label() + ")");
  if (resume && checkpoint.config_hash != config_hash)
    throw CompatibilityError("checkpoint: config hash mismatch on resume");
}

}  // namespace unirep
