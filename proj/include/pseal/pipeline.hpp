#pragma once

// End-to-end face pipeline shared by the command-line tool and the Python
// module: configuration, manifests, enrollment templates, comparisons and
// the evaluation protocols.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseal/codec.hpp"
#include "pseal/evalkit.hpp"
#include "pseal/geometry.hpp"
#include "pseal/handgeom.hpp"
#include "pseal/marks.hpp"
#include "pseal/matching.hpp"
#include "pseal/payload.hpp"

namespace pseal::pipeline {

enum class Matcher { kFmm, kCaf2, kCaf1 };

struct PipelineConfig {
  marks::DetectorConfig detector;
  geometry::MaskConfig mask;
  double t0 = evalkit::kDefaultIouThreshold;
  double region_halfwidth = 0.05;
  matching::FusionWeights fusion;
  Matcher matcher = Matcher::kFmm;
  payload::BiometricCipher cipher = payload::BiometricCipher::kSecureForce;
  int bits_per_module = 3;  // 1 encodes the biometric symbol as plain QR
  codec::EcLevel biometric_level = codec::EcLevel::kL;
  codec::EcLevel demographic_level = codec::EcLevel::kM;
  double tau = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t created_at = 0;
  std::string mean_shape;  // path; empty selects the built-in mean shape
};

/// Throws kWeightSum or kBadConfig.
void validate(const PipelineConfig& cfg);

/// `key = value` lines with `#` comments, applied on top of `base`. Unknown
/// keys and malformed values raise kBadConfig.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
/// Every key with its current value, in a form parse_config accepts.
std::string format_config(const PipelineConfig& cfg);

inline constexpr const char* kConfigEnv = "PASSPORT_SEAL_CONFIG";

// -- manifests: subject, image, landmarks, [marks], [hand], [face_score] --------

struct ManifestRow {
  std::string subject;
  std::filesystem::path image;
  std::filesystem::path landmarks;
  std::optional<std::filesystem::path> marks;
  std::optional<std::filesystem::path> hand;
  std::optional<double> face_score;
};

/// Relative paths resolve against `base_dir`. Throws kInvalidField.
std::vector<ManifestRow> parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path);
/// Paths are written relative to `base_dir` when they lie under it.
std::string format_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& base_dir = {});

// -- per-sample processing ---------------------------------------------------------

geometry::MeanShape mean_shape_for(const PipelineConfig& cfg, geometry::Schema schema);

struct ProcessedFace {
  imaging::GrayImage warped;
  geometry::Mask mask;
  marks::MarkSet marks;
};

ProcessedFace process_face(const imaging::GrayImage& image, const geometry::LandmarkSet& lm,
                           const geometry::MeanShape& mean, const PipelineConfig& cfg);

/// Loads the row's image and landmarks (bounded by the image) and processes them.
ProcessedFace process_row(const ManifestRow& row, const PipelineConfig& cfg);

/// The canonical (quantized) template of one enrollment.
payload::BiometricTemplate make_template(const geometry::LandmarkSet& lm, const marks::MarkSet& marks,
                                         std::optional<handgeom::HandFeatureVector> hand, std::uint64_t created_at);

struct Comparison {
  matching::MatchScore mark;
  std::optional<matching::MatchScore> fused;
  double similarity = 0;  // fused when a face score is present
};

/// fmm or caf2 per cfg.matcher. An empty gallery raises kInsufficientMarks.
Comparison compare(const marks::MarkSet& gallery, const marks::MarkSet& probe, std::optional<double> face_score,
                   const PipelineConfig& cfg);
/// caf1 against the probe's warped image.
Comparison compare_patches(std::span<const matching::GalleryPatch> gallery, const imaging::GrayImage& probe,
                           std::optional<double> face_score, const PipelineConfig& cfg);

// -- evaluation protocols --------------------------------------------------------------

struct DetectionEval {
  evalkit::DetectionTally tally;
  int images = 0;
};

/// Rows without a marks file are skipped; none at all raises kInsufficientData.
DetectionEval eval_detection(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg);

struct VerificationEval {
  evalkit::ScoreSet scores;
  evalkit::RocSummary roc;
  std::vector<matching::ScoreRecord> records;
  std::vector<evalkit::FusionRow> fusion;  // filled when face scores are supplied
};

/// Sample keys are `<subject>#<index within subject>`.
std::vector<std::string> sample_keys(const std::vector<ManifestRow>& rows);

/// Face scores for fusion: `gallery_key probe_key value` lines.
using FaceScores = std::map<std::pair<std::string, std::string>, double>;
FaceScores parse_face_scores(std::string_view text);

/// All ordered pairs of distinct samples. Needs two subjects and a subject
/// with two samples (kInsufficientData otherwise).
VerificationEval eval_verification(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg,
                                   const FaceScores* face_scores = nullptr);

struct IdentificationEval {
  std::vector<double> arr;  // ranks 1..max_rank
  int trials = 0;
};

/// k-fold identification: each subject's samples are shuffled with cfg.seed
/// and dealt round-robin into the folds. Candidates rank by their best
/// similarity over gallery samples, ties by id.
IdentificationEval eval_identification(const std::vector<ManifestRow>& rows, const PipelineConfig& cfg,
                                       int folds = 5, int max_rank = 10);

/// 10-fold hand-geometry identification accuracy over rows with a hand file.
double eval_hand(const std::vector<ManifestRow>& rows, int folds = 10);

}  // namespace pseal::pipeline
