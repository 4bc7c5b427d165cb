// Builds a tiny synthetic fundus-like sample, pushes it through a few
// transforms, and scores a blurred copy of the ground truth against the
// original mask.
//
//   demo_augment_and_score [output_dir]

#include <cmath>
#include <filesystem>
#include <iostream>
#include <vector>

#include "vesselaug/vesselaug.hpp"

using namespace vesselaug;

namespace {

Sample synthetic_sample(int size) {
  std::vector<float> rgb(static_cast<std::size_t>(size) * size * 3);
  std::vector<std::uint8_t> vessels(static_cast<std::size_t>(size) * size);
  std::vector<std::uint8_t> fov(vessels.size());
  const double c = (size - 1) * 0.5;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * size + x;
      const double r = std::hypot(x - c, y - c);
      fov[i] = r < 0.48 * size;
      // Two "vessels": a diagonal and a gentle arc.
      const bool on_vessel = std::abs(x - y) < 2 || std::abs(r - 0.3 * size) < 1.5;
      vessels[i] = fov[i] && on_vessel;
      const float base = fov[i] ? 0.55f - 0.2f * static_cast<float>(r / size) : 0.0f;
      rgb[i * 3 + 0] = base + 0.2f;
      rgb[i * 3 + 1] = vessels[i] ? base * 0.5f : base;
      rgb[i * 3 + 2] = base * 0.4f;
    }
  }
  return Sample(ImagePlane(size, size, 3, std::move(rgb)), BinaryMask(size, size, std::move(vessels)),
                BinaryMask(size, size, std::move(fov)), "synthetic");
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "demo_out";
  std::filesystem::create_directories(out);

  const Sample source = synthetic_sample(96);
  RandomStream rng = derive_stream(SeedSpec{kDefaultSeed, source.id(), 0, 0});

  Sample s = rotate(source, rng);
  RandomStream elastic_rng = rng.split(1);
  s = elastic_deform(s, ElasticParams{}, elastic_rng);
  s = s.with_image(gamma_correct(s.image(), GammaParams{1.2}));
  save_png(s.image(), out / "augmented_image.png");
  save_png(s.vessels(), out / "augmented_vessels.png");

  // A stand-in "prediction": the blurred ground truth.
  std::vector<float> truth_as_float(source.vessels().pixel_count());
  for (std::size_t i = 0; i < truth_as_float.size(); ++i) truth_as_float[i] = source.vessels().data()[i];
  const ImagePlane soft = blur(ImagePlane(96, 96, 1, truth_as_float), FilterParams{1.5});
  const ProbabilityMap pred(96, 96, std::vector<float>(soft.data().begin(), soft.data().end()));

  const BinaryMask fov = source.fov_or_all();
  const BinaryMask binary = pred.binarize(0.5f);
  std::cout << "accuracy " << accuracy(confusion(binary, source.vessels(), fov)) << '\n'
            << "auc      " << roc_auc(pred, source.vessels(), fov) << '\n'
            << "dice     " << dice(binary, source.vessels(), fov) << '\n';
  save_png(render_overlay(binary, source.vessels()), out / "overlay.png");
  return 0;
}
