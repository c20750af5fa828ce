#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mtrans/data_io.hpp"
#include "mtrans/errors.hpp"

namespace mtrans {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints assume little-endian");

constexpr char kMagic[8] = {'M', 'T', 'R', 'A', 'N', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.append(raw, sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void put_matrix(const Mat& m) {
    put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    buf_.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Mat get_matrix() {
    const auto rows = get<std::uint32_t>();
    const auto cols = get<std::uint32_t>();
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    need(n * sizeof(double));
    Mat m(rows, cols);
    std::memcpy(m.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return m;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw LoadError("checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model& model, const TrainConfig& config) {
  Writer w;
  w.put<std::int32_t>(config.beta);
  w.put<double>(config.rollin_k);
  w.put<double>(config.rollout_mix_p);
  w.put<std::int32_t>(static_cast<std::int32_t>(config.objective));
  w.put<std::int32_t>(config.beam_width);
  w.put<std::int32_t>(config.char_dim);
  w.put<std::int32_t>(config.feat_dim);
  w.put<std::int32_t>(config.hidden_dim);
  w.put<std::int32_t>(config.max_actions_slack);
  w.put<std::int32_t>(config.patience);
  w.put<std::int32_t>(config.max_epochs);
  w.put<std::uint64_t>(config.seed);
  w.put<double>(config.mrt_lambda);
  w.put<std::int32_t>(config.mrt_max_samples);
  w.put<double>(config.mrt_alpha);

  w.put<std::int32_t>(model.dims.char_dim);
  w.put<std::int32_t>(model.dims.feat_dim);
  w.put<std::int32_t>(model.dims.hidden_dim);

  const auto& chars = model.vocabs.alphabet.surface_chars();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(chars.size()));
  for (char32_t c : chars) w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
  const auto& feats = model.vocabs.features.names();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(feats.size()));
  for (const auto& f : feats) w.put_string(f);

  const auto tensors = model.params.tensors();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const Mat* t : tensors) w.put_matrix(*t);

  std::string out(kMagic, sizeof(kMagic));
  Writer header;
  header.put<std::uint32_t>(kVersion);
  header.put<std::uint64_t>(static_cast<std::uint64_t>(w.bytes().size()));
  header.put<std::uint64_t>(fnv1a(w.bytes()));
  out += header.bytes();
  out += w.bytes();
  return out;
}

ModelBundle deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError("not a checkpoint file (bad magic)");
  }
  Reader header(std::string_view(bytes).substr(sizeof(kMagic)));
  const auto version = header.get<std::uint32_t>();
  if (version != kVersion) {
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto length = header.get<std::uint64_t>();
  const auto checksum = header.get<std::uint64_t>();
  const std::size_t offset = sizeof(kMagic) + 4 + 8 + 8;
  if (bytes.size() - offset != length) throw LoadError("checkpoint is truncated");
  const std::string_view payload = std::string_view(bytes).substr(offset);
  if (fnv1a(payload) != checksum) throw LoadError("checkpoint checksum mismatch");

  Reader r(payload);
  TrainConfig c;
  c.beta = r.get<std::int32_t>();
  c.rollin_k = r.get<double>();
  c.rollout_mix_p = r.get<double>();
  const auto objective = r.get<std::int32_t>();
  if (objective < 0 || objective > static_cast<int>(Objective::Mrt)) {
    throw LoadError("checkpoint has an unknown objective");
  }
  c.objective = static_cast<Objective>(objective);
  c.beam_width = r.get<std::int32_t>();
  c.char_dim = r.get<std::int32_t>();
  c.feat_dim = r.get<std::int32_t>();
  c.hidden_dim = r.get<std::int32_t>();
  c.max_actions_slack = r.get<std::int32_t>();
  c.patience = r.get<std::int32_t>();
  c.max_epochs = r.get<std::int32_t>();
  c.seed = r.get<std::uint64_t>();
  c.mrt_lambda = r.get<double>();
  c.mrt_max_samples = r.get<std::int32_t>();
  c.mrt_alpha = r.get<double>();

  ModelDims dims;
  dims.char_dim = r.get<std::int32_t>();
  dims.feat_dim = r.get<std::int32_t>();
  dims.hidden_dim = r.get<std::int32_t>();

  Vocabularies v;
  std::vector<char32_t> chars(r.get<std::uint32_t>());
  for (auto& ch : chars) ch = static_cast<char32_t>(r.get<std::uint32_t>());
  std::vector<std::string> feats(r.get<std::uint32_t>());
  for (auto& f : feats) f = r.get_string();
  v.alphabet = Alphabet(std::move(chars));
  v.actions = ActionVocab(v.alphabet);
  v.features = FeatureVocab(std::move(feats));

  // Shapes come from a freshly initialized model; stored tensors overwrite it.
  Model m = make_model(std::move(v), dims, 0);
  auto tensors = m.params.tensors();
  if (r.get<std::uint32_t>() != tensors.size()) throw LoadError("checkpoint tensor count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    Mat t = r.get_matrix();
    if (t.rows() != tensors[k]->rows() || t.cols() != tensors[k]->cols()) {
      throw LoadError("checkpoint tensor " + ModelParams::tensor_names()[k] + " has the wrong shape");
    }
    *tensors[k] = std::move(t);
  }
  if (!r.done()) throw LoadError("checkpoint has trailing bytes");
  return {std::move(m), c};
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainConfig& config) {
  const auto bytes = serialize_checkpoint(model, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace mtrans
