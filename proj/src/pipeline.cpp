#include "pseal/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pseal/error.hpp"
#include "pseal/io.hpp"
#include "pseal/synth.hpp"

namespace pseal::pipeline {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
  return b == std::string_view::npos ? std::string() : std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) fail(ErrorCode::kBadConfig, key + ": '" + v + "' is not a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    fail(ErrorCode::kBadConfig, key + ": '" + v + "' is not an unsigned integer");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) fail(ErrorCode::kBadConfig, key + ": '" + v + "' is not an integer");
  return out;
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string_view mode_name(marks::ThresholdMode m) {
  switch (m) {
    case marks::ThresholdMode::kMaxFraction: return "max_fraction";
    case marks::ThresholdMode::kQuantile: return "quantile";
    case marks::ThresholdMode::kAbsolute: return "absolute";
  }
  return "max_fraction";
}

std::string_view matcher_name(Matcher m) {
  switch (m) {
    case Matcher::kFmm: return "fmm";
    case Matcher::kCaf2: return "caf2";
    case Matcher::kCaf1: return "caf1";
  }
  return "fmm";
}

codec::EcLevel to_level(const std::string& key, const std::string& v) {
  try {
    return codec::parse_ec_level(v);
  } catch (const Error&) {
    fail(ErrorCode::kBadConfig, key + ": '" + v + "' is not one of L, M, Q, H");
  }
}

matching::MatchConfig match_config(const PipelineConfig& cfg) {
  matching::MatchConfig m;
  m.region_halfwidth = cfg.region_halfwidth;
  m.descriptor = cfg.matcher == Matcher::kCaf2 ? matching::Descriptor::kOrientation : matching::Descriptor::kIntensity;
  return m;
}

Comparison finish(matching::MatchScore mark, std::optional<double> face_score, const PipelineConfig& cfg) {
  Comparison c;
  c.mark = std::move(mark);
  if (face_score) {
    c.fused = matching::fuse(*face_score, c.mark, cfg.fusion);
    c.similarity = c.fused->value;
  } else {
    c.similarity = matching::similarity(c.mark);
  }
  return c;
}

struct Sample {
  std::string key;
  std::string subject;
  ProcessedFace face;
  std::vector<matching::GalleryPatch> patches;
};

std::vector<Sample> process_all(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg) {
  std::vector<Sample> out;
  const auto keys = sample_keys(rows);
  for (size_t i = 0; i < rows.size(); ++i) {
    Sample s{keys[i], rows[i].subject, process_row(rows[i], cfg), {}};
    if (cfg.matcher == Matcher::kCaf1) s.patches = matching::gallery_patches(s.face.marks, s.face.warped);
    out.push_back(std::move(s));
  }
  return out;
}

// A gallery sample without marks cannot vouch for anyone: score it as the
// worst comparison instead of aborting the whole protocol.
Comparison compare_samples(const Sample& g, const Sample& p, std::optional<double> face, const PipelineConfig& cfg) {
  try {
    if (cfg.matcher == Matcher::kCaf1) return compare_patches(g.patches, p.face.warped, face, cfg);
    return compare(g.face.marks, p.face.marks, face, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientMarks) throw;
    matching::MatchScore worst;
    worst.kind = cfg.matcher == Matcher::kCaf1   ? matching::ScoreKind::kCaf1Similarity
                 : cfg.matcher == Matcher::kCaf2 ? matching::ScoreKind::kCaf2Distance
                                                 : matching::ScoreKind::kFmmDistance;
    worst.value = matching::is_distance(worst.kind) ? 1.0 : 0.0;
    return finish(worst, face, cfg);
  }
}

std::optional<double> face_for(const FaceScores* scores, const std::string& g, const std::string& p) {
  if (!scores) return std::nullopt;
  const auto it = scores->find({g, p});
  if (it == scores->end()) fail(ErrorCode::kInsufficientData, "no face score for pair " + g + " " + p);
  return it->second;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  marks::validate(cfg.detector);
  matching::validate(cfg.fusion);
  if (!(cfg.tau >= 0 && cfg.tau <= 1)) fail(ErrorCode::kBadConfig, "tau must lie in [0,1]");
  if (!(cfg.t0 > 0 && cfg.t0 <= 1)) fail(ErrorCode::kBadConfig, "t0 must lie in (0,1]");
  if (!(cfg.region_halfwidth > 0)) fail(ErrorCode::kBadConfig, "region_halfwidth must be positive");
  if (cfg.bits_per_module < 1 || cfg.bits_per_module > 3) fail(ErrorCode::kBadConfig, "bits_per_module must be 1..3");
}

PipelineConfig parse_config(std::string_view text, PipelineConfig cfg) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kBadConfig, "config line " + std::to_string(line_no) + " lacks '='");
    const std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    auto& d = cfg.detector;
    if (key == "sigma") d.sigma = to_double(key, v);
    else if (key == "threshold_mode") {
      if (v == "max_fraction") d.mode = marks::ThresholdMode::kMaxFraction;
      else if (v == "quantile") d.mode = marks::ThresholdMode::kQuantile;
      else if (v == "absolute") d.mode = marks::ThresholdMode::kAbsolute;
      else fail(ErrorCode::kBadConfig, "threshold_mode: unknown mode '" + v + "'");
    } else if (key == "levels") {
      d.levels.clear();
      std::istringstream ls(v);
      std::string item;
      while (std::getline(ls, item, ',')) d.levels.push_back(to_double(key, trim(item)));
    } else if (key == "component_trigger") d.component_trigger = to_int(key, v);
    else if (key == "min_size") d.min_size = to_int(key, v);
    else if (key == "extent_level") d.extent_level = to_double(key, v);
    else if (key == "min_contrast") d.min_contrast = to_double(key, v);
    else if (key == "patch_margin") d.patch_margin = to_int(key, v);
    else if (key == "feature_dilation") cfg.mask.feature_dilation = to_int(key, v);
    else if (key == "edge_sigma") cfg.mask.edge_sigma = to_double(key, v);
    else if (key == "edge_low") cfg.mask.edge_low = to_double(key, v);
    else if (key == "edge_high") cfg.mask.edge_high = to_double(key, v);
    else if (key == "max_edge_length") cfg.mask.max_edge_length = to_int(key, v);
    else if (key == "edge_dilation") cfg.mask.edge_dilation = to_int(key, v);
    else if (key == "region_halfwidth") cfg.region_halfwidth = d.region_halfwidth = to_double(key, v);
    else if (key == "t0") cfg.t0 = to_double(key, v);
    else if (key == "w_fr") cfg.fusion.w_fr = to_double(key, v);
    else if (key == "w_fmm") cfg.fusion.w_fmm = to_double(key, v);
    else if (key == "matcher") {
      if (v == "fmm") cfg.matcher = Matcher::kFmm;
      else if (v == "caf2") cfg.matcher = Matcher::kCaf2;
      else if (v == "caf1") cfg.matcher = Matcher::kCaf1;
      else fail(ErrorCode::kBadConfig, "matcher: unknown matcher '" + v + "'");
    } else if (key == "cipher") {
      if (v == "sf") cfg.cipher = payload::BiometricCipher::kSecureForce;
      else if (v == "hybrid") cfg.cipher = payload::BiometricCipher::kHybrid;
      else fail(ErrorCode::kBadConfig, "cipher: expected sf or hybrid");
    } else if (key == "codec") {
      if (v == "qr") cfg.bits_per_module = 1;
      else if (v == "hcc2d") cfg.bits_per_module = cfg.bits_per_module == 1 ? 3 : cfg.bits_per_module;
      else fail(ErrorCode::kBadConfig, "codec: expected qr or hcc2d");
    } else if (key == "bits_per_module") cfg.bits_per_module = to_int(key, v);
    else if (key == "biometric_ec_level") cfg.biometric_level = to_level(key, v);
    else if (key == "demographic_ec_level") cfg.demographic_level = to_level(key, v);
    else if (key == "tau") cfg.tau = to_double(key, v);
    else if (key == "seed") cfg.seed = to_u64(key, v);
    else if (key == "created_at") cfg.created_at = to_u64(key, v);
    else if (key == "mean_shape") cfg.mean_shape = v;
    else fail(ErrorCode::kBadConfig, "unknown config key '" + key + "'");
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, "missing config file " + path.string());
  return parse_config(io::read_text(path), std::move(base));
}

std::string format_config(const PipelineConfig& cfg) {
  const auto& d = cfg.detector;
  std::ostringstream os;
  os << "sigma = " << num(d.sigma) << "\nthreshold_mode = " << mode_name(d.mode) << "\nlevels = ";
  for (size_t i = 0; i < d.levels.size(); ++i) os << (i ? "," : "") << num(d.levels[i]);
  os << "\ncomponent_trigger = " << d.component_trigger << "\nmin_size = " << d.min_size
     << "\nextent_level = " << num(d.extent_level) << "\nmin_contrast = " << num(d.min_contrast)
     << "\npatch_margin = " << d.patch_margin << "\nfeature_dilation = " << cfg.mask.feature_dilation
     << "\nedge_sigma = " << num(cfg.mask.edge_sigma) << "\nedge_low = " << num(cfg.mask.edge_low)
     << "\nedge_high = " << num(cfg.mask.edge_high) << "\nmax_edge_length = " << cfg.mask.max_edge_length
     << "\nedge_dilation = " << cfg.mask.edge_dilation << "\nregion_halfwidth = " << num(cfg.region_halfwidth)
     << "\nt0 = " << num(cfg.t0) << "\nw_fr = " << num(cfg.fusion.w_fr) << "\nw_fmm = " << num(cfg.fusion.w_fmm)
     << "\nmatcher = " << matcher_name(cfg.matcher)
     << "\ncipher = " << (cfg.cipher == payload::BiometricCipher::kSecureForce ? "sf" : "hybrid")
     << "\ncodec = " << (cfg.bits_per_module == 1 ? "qr" : "hcc2d") << "\nbits_per_module = " << cfg.bits_per_module
     << "\nbiometric_ec_level = " << codec::ec_level_char(cfg.biometric_level)
     << "\ndemographic_ec_level = " << codec::ec_level_char(cfg.demographic_level) << "\ntau = " << num(cfg.tau)
     << "\nseed = " << cfg.seed << "\ncreated_at = " << cfg.created_at << '\n';
  if (!cfg.mean_shape.empty()) os << "mean_shape = " << cfg.mean_shape << '\n';
  return os.str();
}

// -- manifests ---------------------------------------------------------------------------

std::vector<ManifestRow> parse_manifest(std::string_view text, const fs::path& base_dir) {
  std::vector<ManifestRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) f.push_back(trim(field));
    const std::string where = "manifest line " + std::to_string(line_no);
    if (f.size() < 3 || f.size() > 6) fail(ErrorCode::kInvalidField, where + ": expected 3 to 6 tab-separated fields");
    if (f[0].empty() || f[1].empty() || f[2].empty())
      fail(ErrorCode::kInvalidField, where + ": subject, image and landmarks are required");
    ManifestRow r{f[0], resolve(f[1]), resolve(f[2]), {}, {}, {}};
    if (f.size() > 3 && !f[3].empty()) r.marks = resolve(f[3]);
    if (f.size() > 4 && !f[4].empty()) r.hand = resolve(f[4]);
    if (f.size() > 5 && !f[5].empty()) {
      double v = 0;
      const auto [p, ec] = std::from_chars(f[5].data(), f[5].data() + f[5].size(), v);
      if (ec != std::errc{} || p != f[5].data() + f[5].size() || v < 0 || v > 1)
        fail(ErrorCode::kInvalidField, where + ": face_score must be a number in [0,1]");
      r.face_score = v;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ManifestRow> load_manifest(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::kIo, "missing manifest " + path.string());
  return parse_manifest(io::read_text(path), path.parent_path());
}

std::string format_manifest(const std::vector<ManifestRow>& rows, const fs::path& base_dir) {
  auto rel = [&](const fs::path& p) {
    if (base_dir.empty()) return p.generic_string();
    const auto r = p.lexically_relative(base_dir);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  std::string out;
  for (const auto& r : rows) {
    out += r.subject + '\t' + rel(r.image) + '\t' + rel(r.landmarks) + '\t' + (r.marks ? rel(*r.marks) : "") + '\t' +
           (r.hand ? rel(*r.hand) : "") + '\t' + (r.face_score ? num(*r.face_score) : "") + '\n';
  }
  return out;
}

// -- processing ---------------------------------------------------------------------------

geometry::MeanShape mean_shape_for(const PipelineConfig& cfg, geometry::Schema schema) {
  if (cfg.mean_shape.empty()) return synth::default_mean_shape(schema);
  auto mean = geometry::load_mean_shape(cfg.mean_shape);
  if (mean.schema != schema) fail(ErrorCode::kSchemaMismatch, "mean shape schema differs from the landmarks");
  return mean;
}

ProcessedFace process_face(const imaging::GrayImage& image, const geometry::LandmarkSet& lm,
                           const geometry::MeanShape& mean, const PipelineConfig& cfg) {
  ProcessedFace out;
  out.warped = geometry::warp_to_mean(image, lm, mean);
  const auto generic = geometry::generic_mask(mean, cfg.mask);
  out.mask = geometry::user_mask(generic, out.warped, cfg.mask);
  auto det = cfg.detector;
  det.region_halfwidth = cfg.region_halfwidth;
  out.marks = marks::detect_marks(out.warped, out.mask, det);
  return out;
}

ProcessedFace process_row(const ManifestRow& row, const PipelineConfig& cfg) {
  if (!fs::exists(row.image)) fail(ErrorCode::kIo, "missing image " + row.image.string());
  const auto image = imaging::read_pgm(row.image);
  const auto lm = geometry::load_landmarks(row.landmarks, geometry::Frame{image.width(), image.height()});
  return process_face(image, lm, mean_shape_for(cfg, lm.schema), cfg);
}

payload::BiometricTemplate make_template(const geometry::LandmarkSet& lm, const marks::MarkSet& marks,
                                         std::optional<handgeom::HandFeatureVector> hand, std::uint64_t created_at) {
  payload::BiometricTemplate t;
  t.schema = lm.schema;
  t.landmarks = lm.points;
  t.marks = marks;
  t.hand = hand;
  t.created_at = created_at;
  return payload::quantize(t);
}

Comparison compare(const marks::MarkSet& gallery, const marks::MarkSet& probe, std::optional<double> face_score,
                   const PipelineConfig& cfg) {
  if (cfg.matcher == Matcher::kCaf1) fail(ErrorCode::kBadConfig, "caf1 compares image patches, not mark sets");
  if (gallery.marks.empty()) fail(ErrorCode::kInsufficientMarks, "the enrolled template has no marks");
  return finish(matching::fmm(gallery, probe, match_config(cfg)), face_score, cfg);
}

Comparison compare_patches(std::span<const matching::GalleryPatch> gallery, const imaging::GrayImage& probe,
                           std::optional<double> face_score, const PipelineConfig& cfg) {
  if (gallery.empty()) fail(ErrorCode::kInsufficientMarks, "the gallery sample has no marks");
  return finish(matching::caf1(gallery, probe, match_config(cfg)), face_score, cfg);
}

// -- protocols ------------------------------------------------------------------------------

DetectionEval eval_detection(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg) {
  DetectionEval out;
  out.tally.t0 = cfg.t0;
  for (const auto& row : rows) {
    if (!row.marks) continue;
    const auto truth = marks::load_mark_file(*row.marks);
    const auto face = process_row(row, cfg);
    std::vector<imaging::Box> gt, det;
    for (const auto& b : truth) gt.push_back(b.bbox);
    for (const auto& m : face.marks.marks) det.push_back(m.bbox);
    out.tally += evalkit::score_detections(gt, det, cfg.t0);
    ++out.images;
  }
  if (out.images == 0) fail(ErrorCode::kInsufficientData, "detection needs rows with a marks file (found 0)");
  return out;
}

std::vector<std::string> sample_keys(const std::vector<ManifestRow>& rows) {
  std::map<std::string, int> seen;
  std::vector<std::string> keys;
  for (const auto& r : rows) keys.push_back(r.subject + "#" + std::to_string(seen[r.subject]++));
  return keys;
}

FaceScores parse_face_scores(std::string_view text) {
  FaceScores out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string g, p, v;
    if (!(ls >> g >> p >> v)) fail(ErrorCode::kInvalidField, "face score line " + std::to_string(line_no));
    const double value = to_double("face score", v);
    if (value < 0 || value > 1) fail(ErrorCode::kInvalidField, "face score outside [0,1]");
    out[{g, p}] = value;
  }
  return out;
}

VerificationEval eval_verification(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg,
                                   const FaceScores* face_scores) {
  std::map<std::string, int> per_subject;
  for (const auto& r : rows) ++per_subject[r.subject];
  const bool has_pair = std::any_of(per_subject.begin(), per_subject.end(), [](auto& kv) { return kv.second >= 2; });
  if (per_subject.size() < 2 || !has_pair)
    fail(ErrorCode::kInsufficientData, "verification needs >= 2 subjects and a subject with >= 2 samples (got " +
                                           std::to_string(per_subject.size()) + " subjects, " +
                                           std::to_string(rows.size()) + " samples)");
  const auto samples = process_all(rows, cfg);
  VerificationEval out;
  std::vector<evalkit::FusionTrial> trials;
  for (const auto& g : samples) {
    for (const auto& p : samples) {
      if (&g == &p) continue;
      const bool genuine = g.subject == p.subject;
      const auto face = face_for(face_scores, g.key, p.key);
      const auto c = compare_samples(g, p, face, cfg);
      (genuine ? out.scores.genuine : out.scores.impostor).push_back(c.similarity);
      out.records.push_back({g.key, p.key, c.mark.kind, c.mark.value});
      if (c.fused) {
        out.records.push_back({g.key, p.key, c.fused->kind, c.fused->value});
        trials.push_back({*face, c.mark, genuine});
      }
    }
  }
  out.roc = evalkit::roc(out.scores, std::vector<double>{0.001});
  if (!trials.empty()) out.fusion = evalkit::fusion_sweep(trials, evalkit::default_weight_grid());
  return out;
}

IdentificationEval eval_identification(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg, int folds,
                                       int max_rank) {
  std::map<std::string, std::vector<size_t>> by_subject;
  for (size_t i = 0; i < rows.size(); ++i) by_subject[rows[i].subject].push_back(i);
  if (folds < 2 || rows.size() < static_cast<size_t>(folds) || by_subject.size() < 2)
    fail(ErrorCode::kInsufficientData, "identification with " + std::to_string(folds) + " folds needs >= " +
                                           std::to_string(std::max(folds, 2)) + " samples over >= 2 subjects (got " +
                                           std::to_string(rows.size()) + " samples, " +
                                           std::to_string(by_subject.size()) + " subjects)");
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> fold_of(rows.size());
  for (auto& [id, idx] : by_subject) {
    // Fisher-Yates with explicit draws keeps the order platform-independent.
    for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (size_t k = 0; k < idx.size(); ++k) fold_of[idx[k]] = static_cast<int>(k % folds);
  }

  const auto samples = process_all(rows, cfg);
  const size_t n = samples.size();
  std::vector<double> sim(n * n, 0.0);
  for (size_t g = 0; g < n; ++g)
    for (size_t p = 0; p < n; ++p)
      if (g != p && fold_of[g] != fold_of[p])
        sim[g * n + p] = compare_samples(samples[g], samples[p], std::nullopt, cfg).similarity;

  std::vector<evalkit::IdentificationTrial> trials;
  for (int f = 0; f < folds; ++f) {
    for (size_t p = 0; p < n; ++p) {
      if (fold_of[p] != f) continue;
      std::map<std::string, double> best;
      for (size_t g = 0; g < n; ++g) {
        if (fold_of[g] == f) continue;
        auto [it, inserted] = best.try_emplace(samples[g].subject, sim[g * n + p]);
        if (!inserted) it->second = std::max(it->second, sim[g * n + p]);
      }
      std::vector<std::pair<std::string, double>> ranked(best.begin(), best.end());
      std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.second > b.second; });
      evalkit::IdentificationTrial t{samples[p].subject, {}};
      for (auto& [id, s] : ranked) t.ranked.push_back(id);
      trials.push_back(std::move(t));
    }
  }
  return {evalkit::cmc(trials, max_rank), static_cast<int>(trials.size())};
}

double eval_hand(const std::vector<ManifestRow>& rows, int folds) {
  std::vector<handgeom::Sample> samples;
  for (const auto& r : rows)
    if (r.hand)
      samples.push_back({r.subject, handgeom::hand_features(handgeom::from_landmarks(geometry::load_landmarks(*r.hand)))});
  if (samples.size() < static_cast<size_t>(folds))
    fail(ErrorCode::kInsufficientData, "hand protocol needs >= " + std::to_string(folds) + " rows with a hand file (got " +
                                           std::to_string(samples.size()) + ")");
  return handgeom::cross_validate(samples, folds);
}

}  // namespace pseal::pipeline
