#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "convdiff/cli.hpp"
#include "convdiff/degradation.hpp"
#include "convdiff/io.hpp"
#include "convdiff/kernels_synth.hpp"
#include "convdiff/metrics.hpp"
#include "convdiff/spectral.hpp"

using namespace convdiff;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string token;
  while (in >> token)
    if (auto eq = token.find('='); eq != std::string::npos) kv[token.substr(0, eq)] = token.substr(eq + 1);
  return kv;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("convdiff-cli-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string sharp_image(const Workspace& ws, std::size_t side = 64, std::size_t channels = 1) {
  const std::string path = ws / (channels == 1 ? "x0.pgm" : "x0.ppm");
  write_image(path, make_test_image(TestImageKind::kBroadband, side, side, 0, channels), 65535);
  return path;
}

}  // namespace

TEST_CASE("evaluate an image against itself") {
  Workspace ws;
  const std::string x = sharp_image(ws);
  const Run r = cli({"evaluate", x, x});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("psnr=100.0000\nssim=1.0000\n") == 0);
  CHECK(key_values(r.out).at("mse") == "0.000000e+00");
}

TEST_CASE("blur writes a circularly blurred image") {
  Workspace ws;
  const std::string x = sharp_image(ws);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "y.pgm", "--sigma", "2"}).code == kExitOk);
  const Image x0 = read_image(x);
  const Image expected =
      degrade(x0, kernel_to_transfer(make_gaussian_kernel({15, 2.0}), 64, 64), DegradationStrength::from_beta(1.0));
  const Image y = read_image(ws / "y.pgm");
  double err = 0.0;
  for (std::size_t i = 0; i < y.plane(0).size(); ++i) err = std::max(err, std::abs(y.plane(0)[i] - expected.plane(0)[i]));
  CHECK(err <= 1.0 / 131070.0);
}

TEST_CASE("blur output is bit reproducible") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32, 3);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "a.ppm", "--sigma", "3"}).code == 0);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "b.ppm", "--sigma", "3"}).code == 0);
  CHECK(read_file_bytes(ws / "a.ppm") == read_file_bytes(ws / "b.ppm"));
}

TEST_CASE("estimate-kernel recovers the kernel used by blur") {
  Workspace ws;
  const std::string x = sharp_image(ws, 128);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "y.pgm", "--sigma", "2"}).code == kExitOk);
  const Run r = cli({"estimate-kernel", "--sharp", x, "--blurred", ws / "y.pgm", "-o", ws / "k.txt"});
  REQUIRE(r.code == kExitOk);
  INFO(r.out);
  const auto kv = key_values(r.out);
  CHECK(std::stod(kv.at("max_negative_tap")) <= 1e-4);
  CHECK(std::stod(kv.at("imag_residue")) <= 1e-6);
  CHECK(std::stod(kv.at("dc_gain_error")) <= 1e-4);
  // 16-bit quantization noise of about 1e-6 per sample, summed in absolute
  // value over the grid outside the window.
  CHECK(std::stod(kv.at("tail_mass")) < 2e-2);
  CHECK(kv.at("dc_status") == "renormalized");
  const KernelFile kf = read_kernel_file(ws / "k.txt");
  CHECK(std::isnan(kf.sigma_hint));
  const Kernel truth = make_gaussian_kernel({15, 2.0});
  double err = 0.0;
  for (std::size_t i = 0; i < truth.taps().size(); ++i) err = std::max(err, std::abs(kf.kernel.taps()[i] - truth.taps()[i]));
  CHECK(err < 1e-4);
}

TEST_CASE("kernel files feed back into blur") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  write_kernel_file(ws / "k.txt", make_gaussian_kernel({9, 1.5}), 1.5);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "a.pgm", "--kernel", ws / "k.txt"}).code == 0);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "b.pgm", "--sigma", "1.5", "--size", "9"}).code == 0);
  CHECK(read_file_bytes(ws / "a.pgm") == read_file_bytes(ws / "b.pgm"));
}

TEST_CASE("trajectory writes images, spectra and falling high-frequency energy") {
  Workspace ws;
  const std::string x = sharp_image(ws);
  const Run r = cli({"trajectory", "-i", x, "--sigma", "3", "--steps", "4", "--out-dir", ws / "traj"});
  REQUIRE(r.code == kExitOk);
  std::istringstream lines(r.out);
  std::string line;
  std::vector<double> energy;
  while (std::getline(lines, line)) energy.push_back(std::stod(key_values(line).at("hf_energy")));
  REQUIRE(energy.size() == 5);
  for (std::size_t t = 0; t + 1 < energy.size(); ++t) CHECK(energy[t + 1] < energy[t]);
  for (int t = 0; t <= 4; ++t) {
    CHECK(fs::exists(ws / ("traj/x_00" + std::to_string(t) + ".pgm")));
    CHECK(fs::exists(ws / ("traj/spectrum_00" + std::to_string(t) + ".pgm")));
  }
  const Image spectrum = read_image(ws / "traj/spectrum_000.pgm");
  CHECK(spectrum(0, 32, 32) == 1.0);
}

TEST_CASE("restore with the classical restorer improves PSNR") {
  Workspace ws;
  const std::string x = sharp_image(ws, 128);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "y.pgm", "--sigma", "3"}).code == kExitOk);
  const Run r = cli({"restore", "-i", ws / "y.pgm", "-o", ws / "r.pgm", "--sigma", "3", "--steps", "5", "--reference",
                     x, "--dump-dir", ws / "dump", "--validate-steps"});
  REQUIRE(r.code == kExitOk);
  INFO(r.out);
  const auto kv = key_values(r.out);
  CHECK(std::stod(kv.at("psnr")) > std::stod(kv.at("input_psnr")));
  const double measured = psnr(read_image(ws / "r.pgm"), read_image(x));
  CHECK(std::abs(measured - std::stod(kv.at("psnr"))) < 1e-3);
  CHECK(r.out.find("step=5 beta=1.0000") != std::string::npos);
  CHECK(r.out.find("step=1 beta=0.2000") != std::string::npos);
  for (int t = 1; t <= 5; ++t) {
    CHECK(fs::exists(ws / ("dump/x_t_00" + std::to_string(t) + ".pgm")));
    CHECK(fs::exists(ws / ("dump/x0_hat_spectrum_00" + std::to_string(t) + ".pgm")));
  }
}

TEST_CASE("restore through an external process") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  const Run ok = cli({"restore", "-i", x, "-o", ws / "r.pgm", "--restorer", std::string("external:") + FAKE_RESTORER_PATH});
  CHECK(ok.code == kExitOk);
  CHECK(read_file_bytes(ws / "r.pgm") == read_file_bytes(x));

  const Run bad = cli({"restore", "-i", x, "-o", ws / "r2.pgm", "--restorer",
                       std::string("external:") + FAKE_RESTORER_PATH + " --mode fail"});
  CHECK(bad.code == kExitProcessing);
  CHECK(bad.err.find("step 5") != std::string::npos);
  CHECK_FALSE(fs::exists(ws / "r2.pgm"));
}

TEST_CASE("batch restore processes every image in a directory") {
  Workspace ws;
  fs::create_directories(ws / "in");
  for (int i = 0; i < 3; ++i) {
    const Image x0 = make_test_image(TestImageKind::kBroadband, 32, 32, static_cast<std::uint64_t>(i));
    const Image y = degrade(x0, kernel_to_transfer(make_gaussian_kernel({15, 2.0}), 32, 32), DegradationStrength::from_beta(1.0));
    write_image(ws / ("in/img" + std::to_string(i) + ".pgm"), y, 65535);
  }
  write_file_bytes(ws / "in/notes.txt", std::vector<std::uint8_t>{'h', 'i'});
  const Run r = cli({"restore", "--batch", ws / "in", "--out-dir", ws / "out", "--sigma", "2"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "restored=3 failed=0\n");
  for (int i = 0; i < 3; ++i) {
    const std::string name = "img" + std::to_string(i) + ".pgm";
    REQUIRE(fs::exists(ws / ("out/" + name)));
    REQUIRE(cli({"restore", "-i", ws / ("in/" + name), "-o", ws / "single.pgm", "--sigma", "2"}).code == 0);
    CHECK(read_file_bytes(ws / ("out/" + name)) == read_file_bytes(ws / "single.pgm"));
  }
  write_file_bytes(ws / "in/broken.pgm", std::vector<std::uint8_t>{'P', '5'});
  const Run partial = cli({"restore", "--batch", ws / "in", "--out-dir", ws / "out", "--sigma", "2"});
  CHECK(partial.code == kExitProcessing);
  CHECK(partial.out == "restored=3 failed=1\n");
  CHECK(partial.err.find("broken.pgm") != std::string::npos);
}

TEST_CASE("gen-data writes deterministic training triples") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  REQUIRE(cli({"gen-data", "-i", x, "--sigma", "2", "--count", "4", "--seed", "9", "--out-dir", ws / "a"}).code == 0);
  REQUIRE(cli({"gen-data", "-i", x, "--sigma", "2", "--count", "4", "--seed", "9", "--out-dir", ws / "b"}).code == 0);
  for (const char* f : {"triple_0000_xbeta.cdt", "triple_0003_x0.cdt", "triple_0002_beta.cdt", "manifest.txt", "kernel.txt"})
    CHECK(read_file_bytes(ws / (std::string("a/") + f)) == read_file_bytes(ws / (std::string("b/") + f)));

  const Tensor beta = read_tensor(ws / "a/triple_0001_beta.cdt");
  REQUIRE(beta.dims.empty());
  CHECK(beta.values[0] > 0.0f);
  CHECK(beta.values[0] <= 1.0f);
  const Image x0 = read_image(x);
  const Image xb = tensor_to_image(read_tensor(ws / "a/triple_0001_xbeta.cdt"));
  const Image expected = degrade(x0, kernel_to_transfer(make_gaussian_kernel({15, 2.0}), 32, 32),
                                 DegradationStrength::from_beta(beta.values[0]));
  double err = 0.0;
  for (std::size_t i = 0; i < xb.plane(0).size(); ++i) err = std::max(err, std::abs(xb.plane(0)[i] - expected.plane(0)[i]));
  CHECK(err < 1e-6);
  CHECK(read_kernel_file(ws / "a/kernel.txt").sigma_hint == 2.0);

  REQUIRE(cli({"gen-data", "-i", x, "--sigma", "2", "--count", "4", "--seed", "10", "--out-dir", ws / "c"}).code == 0);
  CHECK(read_file_bytes(ws / "a/manifest.txt") != read_file_bytes(ws / "c/manifest.txt"));
}

TEST_CASE("config file supplies defaults and flags override it") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  const std::string cfg = ws / "run.cfg";
  const std::string text = "# shared settings\nsigma = 3\nsize=9\n";
  write_file_bytes(cfg, std::vector<std::uint8_t>(text.begin(), text.end()));
  REQUIRE(cli({"--config", cfg, "blur", "-i", x, "-o", ws / "a.pgm"}).code == 0);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "b.pgm", "--sigma", "3", "--size", "9"}).code == 0);
  CHECK(read_file_bytes(ws / "a.pgm") == read_file_bytes(ws / "b.pgm"));
  REQUIRE(cli({"--config", cfg, "blur", "-i", x, "-o", ws / "c.pgm", "--sigma", "2"}).code == 0);
  REQUIRE(cli({"blur", "-i", x, "-o", ws / "d.pgm", "--sigma", "2", "--size", "9"}).code == 0);
  CHECK(read_file_bytes(ws / "c.pgm") == read_file_bytes(ws / "d.pgm"));

  const std::string bad = "sigma = lots\n";
  write_file_bytes(ws / "bad.cfg", std::vector<std::uint8_t>(bad.begin(), bad.end()));
  CHECK(cli({"--config", ws / "bad.cfg", "blur", "-i", x, "-o", ws / "e.pgm"}).code == kExitUsage);
}

TEST_CASE("usage errors exit with 1") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"sharpen"},
           {"blur", "-o", ws / "y.pgm", "--sigma", "2"},
           {"blur", "-i", x, "-o", ws / "y.pgm"},
           {"blur", "-i", x, "-o", ws / "y.pgm", "--sigma", "two"},
           {"blur", "-i", x, "-o", ws / "y.pgm", "--sigma", "2", "--maxval", "1023"},
           {"restore", "-i", x, "-o", ws / "r.pgm"},
           {"restore", "-i", x, "-o", ws / "r.pgm", "--restorer", "magic"},
           {"restore", "-i", x, "-o", ws / "r.pgm", "--sigma", "2", "--steps", "0"},
           {"evaluate", x},
           {"gen-data", "-i", x, "--sigma", "2", "--out-dir", ws / "g", "--beta-law", "closed"},
       }) {
    const Run r = cli(args);
    INFO(r.err);
    CHECK(r.code == kExitUsage);
    CHECK_FALSE(r.err.empty());
  }
}

TEST_CASE("processing errors exit with 2 and a one-line message") {
  Workspace ws;
  const std::string x = sharp_image(ws, 32);
  write_image(ws / "other.pgm", Image(16, 16), 255);
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"blur", "-i", ws / "missing.pgm", "-o", ws / "y.pgm", "--sigma", "2"},
           {"evaluate", x, ws / "other.pgm"},
           {"estimate-kernel", "--sharp", x, "--blurred", ws / "other.pgm"},
           {"blur", "-i", ws / "other.pgm", "-o", ws / "y.pgm", "--sigma", "2", "--size", "17"},
           {"blur", "-i", x, "-o", ws / "y.pgm", "--kernel", ws / "missing.txt"},
       }) {
    const Run r = cli(args);
    INFO(r.err);
    CHECK(r.code == kExitProcessing);
    CHECK(r.err.starts_with("error: "));
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("help exits cleanly") {
  const Run r = cli({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("restore") != std::string::npos);
}

TEST_CASE("the installed binary reports exit codes") {
  Workspace ws;
  const std::string x = sharp_image(ws, 16);
  const auto run = [](const std::string& cmd) {
    const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const std::string tool = CONVDIFF_TOOL_PATH;
  CHECK(run(tool + " evaluate " + x + " " + x) == 0);
  CHECK(run(tool + " frobnicate") == 1);
  CHECK(run(tool + " evaluate " + x + " " + ws / "nope.pgm") == 2);
}
