#pragma once

// Synthetic faces and hands with known ground truth. Faces are smooth
// ellipsoidal shading with soft facial features and planted marks, rendered
// under a random similarity pose.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "pseal/geometry.hpp"
#include "pseal/imaging.hpp"

namespace pseal::synth {

using geometry::Frame;
using geometry::LandmarkSet;
using geometry::Point;
using geometry::Schema;

/// The canonical face layout in the 256x256 mean frame.
LandmarkSet canonical_face(Schema schema = Schema::kFace90);

/// mean_shape() of the canonical face alone.
geometry::MeanShape default_mean_shape(Schema schema = Schema::kFace90);

struct PlantedMark {
  Point center;           // canonical frame
  double radius = 3;      // disk radius
  double contrast = 0.4;  // positive darkens
};

struct PlantedSpeck {
  Point corner;  // canonical frame; covers [x, x+2) x [y, y+2)
  double contrast = 0.4;
};

struct FaceSubject {
  std::vector<PlantedMark> marks;
  std::vector<PlantedSpeck> specks;
  double skin = 0.62;
};

struct Pose {
  double scale = 1, angle = 0, tx = 0, ty = 0;
};

struct FaceSample {
  imaging::GrayImage image;
  LandmarkSet landmarks;
  std::vector<imaging::Box> truth;   // planted marks, mean frame
  std::vector<imaging::Box> specks;  // planted 2x2 specks, mean frame
};

struct FaceOptions {
  Schema schema = Schema::kFace90;
  int min_marks = 3;
  int max_marks = 8;
  int specks = 0;
  double bright_fraction = 0.15;
  double landmark_jitter = 0.25;
};

FaceSubject random_subject(std::mt19937_64& rng, const FaceOptions& opt = {});
Pose random_pose(std::mt19937_64& rng);
FaceSample render_face(const FaceSubject& subject, const Pose& pose, std::mt19937_64& rng,
                       const FaceOptions& opt = {}, Frame frame = geometry::kMeanFrame);

/// Pixel box covering the disk's integer pixel centers.
imaging::Box disk_box(const PlantedMark& m);

// -- hands ----------------------------------------------------------------------

struct HandSubject {
  std::array<double, 5> finger_length{};
  std::array<double, 5> base_x{};
  double palm_length = 0;
  double wrist_width = 0;
};

HandSubject random_hand(std::mt19937_64& rng);
/// Hand16 landmarks of one capture: sub-pixel noise plus a random rigid motion.
LandmarkSet render_hand(const HandSubject& subject, std::mt19937_64& rng, double noise = 0.3);

}  // namespace pseal::synth
