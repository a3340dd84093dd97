#include "txbench/exemplar/index.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>

#include "txbench/chem/smiles.hpp"
#include "txbench/common/text.hpp"

namespace txbench::exemplar {

using taskdata::DataPoint;
using taskdata::FeatureKind;

namespace {

constexpr std::string_view kMagic = "TXIX1";

enum KeyTag : std::uint8_t { kTagFingerprint = 1, kTagSequence = 2, kTagExact = 3 };

bool ranks_before(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.point_index < b.point_index;
}

std::vector<Neighbor> top_k(std::vector<Neighbor> all, std::size_t k) {
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

bool same_features(const DataPoint& a, const DataPoint& b) {
  if (a.features.size() != b.features.size()) return false;
  for (std::size_t i = 0; i < a.features.size(); ++i)
    if (a.features[i].value != b.features[i].value) return false;
  return true;
}

void check_query(const taskdata::TaskSpec& task, const DataPoint& q) {
  if (q.features.size() != task.feature_schema.size())
    throw taskdata::SchemaMismatch(std::to_string(task.feature_schema.size()) + " features",
                                   std::to_string(q.features.size()) + " features");
  for (std::size_t i = 0; i < q.features.size(); ++i)
    if (q.features[i].kind != task.feature_schema[i])
      throw taskdata::SchemaMismatch(std::string(taskdata::to_string(task.feature_schema[i])),
                                     std::string(taskdata::to_string(q.features[i].kind)));
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IndexFormatError("truncated index file");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

taskdata::LabelValue parse_label(taskdata::TaskKind kind, const std::string& s) {
  switch (kind) {
    case taskdata::TaskKind::kBinary:
      if (s != "0" && s != "1") throw IndexFormatError("bad binary label in index");
      return s == "1";
    case taskdata::TaskKind::kRegression: {
      double v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw IndexFormatError("bad regression label in index");
      return v;
    }
    case taskdata::TaskKind::kGeneration:
      return s;
  }
  return s;
}

}  // namespace

FeatureKey make_key(FeatureKind kind, const std::string& value, const chem::FingerprintParams& params,
                    std::string* diagnostic) {
  switch (kind) {
    case FeatureKind::kSmiles:
      try {
        return chem::morgan_fingerprint(chem::parse_smiles(value), params);
      } catch (const chem::SmilesError& e) {
        if (diagnostic) *diagnostic = std::string("unparseable SMILES '") + value + "': " + e.what();
        return ExactKey{value};
      }
    case FeatureKind::kAminoAcid:
    case FeatureKind::kNucleotide:
      try {
        return seqalign::make_sequence(
            kind == FeatureKind::kAminoAcid ? seqalign::SequenceKind::kAminoAcid : seqalign::SequenceKind::kNucleotide,
            value);
      } catch (const seqalign::SequenceError& e) {
        if (diagnostic) *diagnostic = std::string("invalid sequence: ") + e.what();
        return ExactKey{value};
      }
    case FeatureKind::kText:
      return ExactKey{text::to_lower(text::collapse_whitespace(value))};
  }
  return ExactKey{value};
}

double key_similarity(const FeatureKey& a, const FeatureKey& b) {
  if (a.index() != b.index()) return 0.0;
  if (const auto* fa = std::get_if<chem::Fingerprint>(&a)) return chem::tanimoto(*fa, std::get<chem::Fingerprint>(b));
  if (const auto* sa = std::get_if<seqalign::BioSequence>(&a))
    return seqalign::percent_identity(*sa, std::get<seqalign::BioSequence>(b));
  return std::get<ExactKey>(a).text == std::get<ExactKey>(b).text ? 1.0 : 0.0;
}

ExemplarIndex ExemplarIndex::build(const taskdata::TaskSpec& task, std::vector<DataPoint> pool,
                                   const IndexOptions& options) {
  if (pool.empty()) throw EmptyPool();
  options.fingerprint.validate();
  if (!options.weights.empty()) {
    if (options.weights.size() != task.feature_schema.size())
      throw std::invalid_argument("one weight per feature is required");
    for (double w : options.weights)
      if (!(w >= 0.0)) throw std::invalid_argument("weights must be non-negative");
  }
  ExemplarIndex idx;
  idx.task_ = task;
  idx.options_ = options;
  idx.pool_ = std::move(pool);
  idx.keys_.reserve(idx.pool_.size());
  for (std::size_t i = 0; i < idx.pool_.size(); ++i) {
    const DataPoint& p = idx.pool_[i];
    taskdata::check_point(task, p, i + 1);
    std::vector<FeatureKey> keys;
    for (const auto& f : p.features) {
      std::string diag;
      keys.push_back(make_key(f.kind, f.value, options.fingerprint, &diag));
      if (!diag.empty()) idx.diagnostics_.push_back("point " + std::to_string(i) + ": " + diag);
    }
    idx.keys_.push_back(std::move(keys));
  }
  if (task.feature_schema.size() == 1 && task.feature_schema[0] == FeatureKind::kSmiles) {
    idx.words_per_fp_ = static_cast<std::size_t>(options.fingerprint.n_bits) / 64;
    if (idx.words_per_fp_ == 0) idx.words_per_fp_ = 1;
    idx.fp_words_.assign(idx.pool_.size() * idx.words_per_fp_, 0);
    idx.fp_popcounts_.assign(idx.pool_.size(), -1);
    for (std::size_t i = 0; i < idx.pool_.size(); ++i) {
      if (const auto* fp = std::get_if<chem::Fingerprint>(&idx.keys_[i][0])) {
        std::copy(fp->words().begin(), fp->words().end(), idx.fp_words_.begin() + static_cast<std::ptrdiff_t>(i * idx.words_per_fp_));
        idx.fp_popcounts_[i] = fp->popcount();
      }
    }
  }
  return idx;
}

std::vector<FeatureKey> ExemplarIndex::keys_for(const DataPoint& query) const {
  check_query(task_, query);
  std::vector<FeatureKey> keys;
  for (const auto& f : query.features) keys.push_back(make_key(f.kind, f.value, options_.fingerprint));
  return keys;
}

double ExemplarIndex::similarity(const std::vector<FeatureKey>& q, std::size_t i) const {
  const auto& keys = keys_[i];
  double total = 0.0;
  double weight_sum = 0.0;
  for (std::size_t f = 0; f < keys.size(); ++f) {
    const double w = options_.weights.empty() ? 1.0 : options_.weights[f];
    if (w == 0.0) continue;
    total += w * key_similarity(q[f], keys[f]);
    weight_sum += w;
  }
  return weight_sum > 0.0 ? total / weight_sum : 0.0;
}

std::vector<Neighbor> ExemplarIndex::scan_single_fingerprint(const chem::Fingerprint& q, std::size_t k,
                                                             const DataPoint& query, bool exclude_self) const {
  std::vector<Neighbor> all;
  all.reserve(pool_.size());
  const std::uint64_t* qw = q.words().data();
  const int qp = q.popcount();
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (exclude_self && same_features(pool_[i], query)) continue;
    const int pp = fp_popcounts_[i];
    double sim = 0.0;
    if (pp >= 0) {
      const int both = chem::and_popcount(qw, fp_words_.data() + i * words_per_fp_, words_per_fp_);
      const int either = qp + pp - both;
      sim = either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
    }
    all.push_back({i, sim});
  }
  return top_k(std::move(all), k);
}

std::vector<Neighbor> ExemplarIndex::query_knn(const DataPoint& query, std::size_t k,
                                               const QueryOptions& options) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::vector<FeatureKey> q = keys_for(query);
  if (!fp_popcounts_.empty()) {
    if (const auto* fp = std::get_if<chem::Fingerprint>(&q[0]))
      return scan_single_fingerprint(*fp, k, query, options.exclude_self);
  }
  std::vector<Neighbor> all;
  all.reserve(pool_.size());
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (options.exclude_self && same_features(pool_[i], query)) continue;
    all.push_back({i, similarity(q, i)});
  }
  return top_k(std::move(all), k);
}

std::string ExemplarIndex::serialize() const {
  Writer w;
  w.raw(kMagic);
  w.str(taskdata::task_to_json(task_).dump());
  w.u32(static_cast<std::uint32_t>(options_.fingerprint.radius));
  w.u32(static_cast<std::uint32_t>(options_.fingerprint.n_bits));
  w.u32(static_cast<std::uint32_t>(options_.weights.size()));
  for (double x : options_.weights) w.u64(std::bit_cast<std::uint64_t>(x));
  w.u32(static_cast<std::uint32_t>(pool_.size()));
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    const DataPoint& p = pool_[i];
    w.u8(static_cast<std::uint8_t>(p.split));
    w.str(taskdata::label_to_string(p.label));
    w.u32(static_cast<std::uint32_t>(p.features.size()));
    for (std::size_t f = 0; f < p.features.size(); ++f) {
      w.str(p.features[f].value);
      const FeatureKey& key = keys_[i][f];
      if (const auto* fp = std::get_if<chem::Fingerprint>(&key)) {
        w.u8(kTagFingerprint);
        w.str(fp->to_hex());
      } else if (const auto* seq = std::get_if<seqalign::BioSequence>(&key)) {
        w.u8(kTagSequence);
        w.str(seq->residues);
      } else {
        w.u8(kTagExact);
        w.str(std::get<ExactKey>(key).text);
      }
    }
  }
  w.u32(static_cast<std::uint32_t>(diagnostics_.size()));
  for (const auto& d : diagnostics_) w.str(d);
  return w.take();
}

ExemplarIndex ExemplarIndex::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw IndexFormatError("not a TXIX1 index");
  taskdata::TaskSpec task;
  try {
    task = taskdata::task_from_json(Json::parse(r.str()));
  } catch (const std::exception& e) {
    throw IndexFormatError(std::string("bad task header: ") + e.what());
  }
  IndexOptions options;
  options.fingerprint.radius = static_cast<int>(r.u32());
  options.fingerprint.n_bits = static_cast<int>(r.u32());
  const std::uint32_t n_weights = r.u32();
  for (std::uint32_t i = 0; i < n_weights; ++i) options.weights.push_back(std::bit_cast<double>(r.u64()));
  const std::uint32_t n = r.u32();
  std::vector<DataPoint> pool;
  std::vector<std::vector<FeatureKey>> keys;
  for (std::uint32_t i = 0; i < n; ++i) {
    DataPoint p;
    std::uint8_t split = r.u8();
    if (split > 2) throw IndexFormatError("bad split tag");
    p.split = static_cast<taskdata::Split>(split);
    p.label = parse_label(task.kind, r.str());
    const std::uint32_t nf = r.u32();
    if (nf != task.feature_schema.size()) throw IndexFormatError("feature count does not match task");
    std::vector<FeatureKey> pk;
    for (std::uint32_t f = 0; f < nf; ++f) {
      p.features.push_back({task.feature_schema[f], r.str()});
      const std::uint8_t tag = r.u8();
      std::string payload = r.str();
      switch (tag) {
        case kTagFingerprint: pk.push_back(chem::Fingerprint::from_hex(payload)); break;
        case kTagSequence:
          pk.push_back(seqalign::BioSequence{task.feature_schema[f] == FeatureKind::kNucleotide
                                                 ? seqalign::SequenceKind::kNucleotide
                                                 : seqalign::SequenceKind::kAminoAcid,
                                             payload});
          break;
        case kTagExact: pk.push_back(ExactKey{payload}); break;
        default: throw IndexFormatError("bad key tag");
      }
    }
    pool.push_back(std::move(p));
    keys.push_back(std::move(pk));
  }
  std::vector<std::string> diagnostics;
  const std::uint32_t nd = r.u32();
  for (std::uint32_t i = 0; i < nd; ++i) diagnostics.push_back(r.str());
  if (!r.done()) throw IndexFormatError("trailing bytes after index");

  // Rebuild recomputes keys; the stored keys must agree with them.
  ExemplarIndex idx = build(task, std::move(pool), options);
  for (std::size_t i = 0; i < idx.keys_.size(); ++i) {
    for (std::size_t f = 0; f < keys[i].size(); ++f) {
      const FeatureKey& a = idx.keys_[i][f];
      const FeatureKey& b = keys[i][f];
      bool same = a.index() == b.index();
      if (same) {
        if (const auto* fa = std::get_if<chem::Fingerprint>(&a)) same = *fa == std::get<chem::Fingerprint>(b);
        else if (const auto* sa = std::get_if<seqalign::BioSequence>(&a))
          same = sa->residues == std::get<seqalign::BioSequence>(b).residues;
        else same = std::get<ExactKey>(a).text == std::get<ExactKey>(b).text;
      }
      if (!same) throw IndexFormatError("stored key disagrees with recomputed key at point " + std::to_string(i));
    }
  }
  return idx;
}

void ExemplarIndex::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

ExemplarIndex ExemplarIndex::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

std::vector<DataPoint> eval_pool(const taskdata::DatasetBundle& bundle) {
  std::vector<DataPoint> pool;
  for (const DataPoint& p : bundle.points)
    if (p.split != taskdata::Split::kTest) pool.push_back(p);
  return pool;
}

}  // namespace txbench::exemplar
