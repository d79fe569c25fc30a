#include "convdiff/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "convdiff/degradation.hpp"
#include "convdiff/errors.hpp"
#include "convdiff/io.hpp"
#include "convdiff/kernel_estimation.hpp"
#include "convdiff/kernels_synth.hpp"
#include "convdiff/metrics.hpp"
#include "convdiff/pipeline.hpp"
#include "convdiff/restorers.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {
namespace {

namespace fs = std::filesystem;

/// Usage problems detected after CLI11 parsing (missing inputs, bad choices).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct KernelOptions {
  std::optional<double> sigma;
  std::size_t size = GaussianSpec::kDefaultSize;
  bool full_support = false;
  std::string kernel_file;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--sigma", sigma, "Gaussian blur standard deviation");
    cmd.add_option("--size", size, "Gaussian support (odd)")->capture_default_str();
    cmd.add_flag("--full-support", full_support, "Use an untruncated Gaussian support of 2*ceil(8 sigma)+1");
    cmd.add_option("--kernel", kernel_file, "Kernel file instead of --sigma");
  }

  bool given() const { return sigma.has_value() || !kernel_file.empty(); }

  /// Kernel plus the sigma hint recorded in kernel files.
  std::pair<Kernel, double> resolve() const {
    if (!kernel_file.empty()) {
      KernelFile kf = read_kernel_file(kernel_file);
      return {std::move(kf.kernel), kf.sigma_hint};
    }
    if (!sigma) throw UsageError("a blur kernel is required: pass --sigma or --kernel");
    const GaussianSpec spec = full_support ? GaussianSpec::full_support(*sigma) : GaussianSpec{size, *sigma};
    return {make_gaussian_kernel(spec), *sigma};
  }
};

void require(bool present, const std::string& option) {
  if (!present) throw UsageError("missing required option " + option);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(6) << v;
  return s.str();
}

std::string dc_status_name(DcStatus s) {
  switch (s) {
    case DcStatus::kUntouched: return "untouched";
    case DcStatus::kRenormalized: return "renormalized";
    case DcStatus::kOutOfRange: return "out_of_range";
  }
  return "unknown";
}

std::string step_name(const char* prefix, std::size_t t, const char* ext) {
  std::ostringstream s;
  s << prefix << std::setw(3) << std::setfill('0') << t << ext;
  return s.str();
}

const char* image_ext(const Image& img) { return img.channels() == 1 ? ".pgm" : ".ppm"; }

void print_validity(std::ostream& out, const KernelValidityReport& r, const std::string& prefix = "") {
  out << prefix << "max_negative_tap=" << sci(r.max_negative_tap) << '\n'
      << prefix << "imag_residue=" << sci(r.imag_residue) << '\n'
      << prefix << "dc_gain_error=" << sci(r.dc_gain_error) << '\n'
      << prefix << "tail_mass=" << sci(r.tail_mass) << '\n'
      << prefix << "is_valid=" << (r.is_valid ? "true" : "false") << '\n';
}

// Config values fill options the user did not pass on the command line.
void apply_config(CLI::App& cmd, const std::map<std::string, std::string>& config) {
  for (CLI::Option* opt : cmd.get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const auto it = config.find(opt->get_lnames().front());
    if (it == config.end()) continue;
    opt->add_result(it->second);
    opt->run_callback();
  }
}

struct RestoreJob {
  fs::path input;
  fs::path output;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency-domain progressive blur and iterative deblurring", "convdiff"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value file supplying defaults for subcommand options");

  std::uint32_t maxval = 65535;
  auto add_maxval = [&](CLI::App* cmd) {
    cmd->add_option("--maxval", maxval, "Output image depth (255 or 65535)")
        ->check(CLI::IsMember({255u, 65535u}))
        ->capture_default_str();
  };

  // blur
  auto* blur = app.add_subcommand("blur", "Blur a sharp image with a kernel (circular convolution)");
  std::string blur_in, blur_out;
  KernelOptions blur_kernel;
  blur->add_option("-i,--input", blur_in, "Sharp image (PGM/PPM)");
  blur->add_option("-o,--output", blur_out, "Blurred output image");
  blur_kernel.add_to(*blur);
  add_maxval(blur);

  // trajectory
  auto* traj = app.add_subcommand("trajectory", "Emit the n+1 images of the blur trajectory and their spectra");
  std::string traj_in, traj_dir;
  std::size_t traj_steps = 4;
  KernelOptions traj_kernel;
  traj->add_option("-i,--input", traj_in, "Sharp image");
  traj->add_option("--steps", traj_steps, "Number of trajectory steps n")->capture_default_str();
  traj->add_option("--out-dir", traj_dir, "Output directory");
  traj_kernel.add_to(*traj);
  add_maxval(traj);

  // estimate-kernel
  auto* est = app.add_subcommand("estimate-kernel", "Wiener estimate of the blur between a sharp/blurred pair");
  std::string est_sharp, est_blurred, est_out;
  std::size_t est_size = GaussianSpec::kDefaultSize;
  double est_reg = WienerConfig{}.regularization;
  bool est_no_dc = false;
  est->add_option("--sharp", est_sharp, "Sharp image");
  est->add_option("--blurred", est_blurred, "Blurred image");
  est->add_option("-o,--output", est_out, "Kernel file to write");
  est->add_option("--size", est_size, "Support of the extracted kernel (odd)")->capture_default_str();
  est->add_option("--regularization", est_reg, "Wiener regularizer S")->capture_default_str();
  est->add_flag("--no-dc-renormalize", est_no_dc, "Leave the DC bin as estimated");

  // restore
  auto* rest = app.add_subcommand("restore", "Iterative progressive deblurring");
  std::string rest_in, rest_out, rest_choice = "wiener", rest_dump, rest_batch, rest_out_dir, rest_reference;
  std::size_t rest_steps = InferenceConfig{}.steps;
  double rest_snr = kDefaultDeconvRegularization;
  double rest_reg = WienerConfig{}.regularization;
  double rest_timeout = 120.0;
  bool rest_validate = false;
  std::size_t rest_support = GaussianSpec::kDefaultSize;
  KernelOptions rest_kernel;
  rest->add_option("-i,--input", rest_in, "Blurred image");
  rest->add_option("-o,--output", rest_out, "Restored image");
  rest->add_option("--restorer", rest_choice, "wiener | identity | external:<command>")->capture_default_str();
  rest->add_option("--steps", rest_steps, "Number of inference steps n")->capture_default_str();
  rest->add_option("--snr-reg", rest_snr, "Regularization of the wiener restorer")->capture_default_str();
  rest->add_option("--regularization", rest_reg, "Wiener kernel-estimation regularizer S")->capture_default_str();
  rest->add_option("--timeout", rest_timeout, "External restorer timeout in seconds")->capture_default_str();
  rest->add_option("--dump-dir", rest_dump, "Write per-step intermediates and spectra here");
  rest->add_flag("--validate-steps", rest_validate, "Report kernel validity of each re-estimated transfer");
  rest->add_option("--validation-support", rest_support, "Support window for --validate-steps")
      ->capture_default_str();
  rest->add_option("--reference", rest_reference, "Sharp reference; prints PSNR/SSIM before and after");
  rest->add_option("--batch", rest_batch, "Restore every PGM/PPM in this directory");
  rest->add_option("--out-dir", rest_out_dir, "Output directory for --batch");
  rest_kernel.add_to(*rest);
  add_maxval(rest);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write (x_beta, beta, x0) training triples as tensor files");
  std::string gen_in, gen_dir, gen_law = "half-open";
  std::size_t gen_count = 8;
  std::uint64_t gen_seed = 0;
  KernelOptions gen_kernel;
  gen->add_option("-i,--input", gen_in, "Sharp image");
  gen->add_option("--count", gen_count, "Number of triples")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out-dir", gen_dir, "Output directory");
  gen->add_option("--beta-law", gen_law, "half-open: U(0,1]  open: U(0,1)")
      ->check(CLI::IsMember({"half-open", "open"}))
      ->capture_default_str();
  gen_kernel.add_to(*gen);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "PSNR/SSIM between two images");
  std::string eval_a, eval_b;
  double eval_peak = 1.0;
  eval->add_option("a", eval_a, "First image")->required();
  eval->add_option("b", eval_b, "Second image")->required();
  eval->add_option("--peak", eval_peak, "Peak signal value")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) {
      const auto config = read_config(config_path);
      for (CLI::App* sub : app.get_subcommands()) apply_config(*sub, config);
    }

    if (blur->parsed()) {
      require(!blur_in.empty(), "--input");
      require(!blur_out.empty(), "--output");
      const auto [kernel, hint] = blur_kernel.resolve();
      const Image x0 = read_image(blur_in);
      const TransferFunction h = kernel_to_transfer(kernel, x0.height(), x0.width());
      write_image(blur_out, degrade(x0, h, DegradationStrength::from_beta(1.0)), maxval);
      return kExitOk;
    }

    if (traj->parsed()) {
      require(!traj_in.empty(), "--input");
      require(!traj_dir.empty(), "--out-dir");
      if (traj_steps == 0) throw UsageError("--steps must be at least 1");
      const auto [kernel, hint] = traj_kernel.resolve();
      const Image x0 = read_image(traj_in);
      const TransferFunction h = kernel_to_transfer(kernel, x0.height(), x0.width());
      fs::create_directories(traj_dir);
      const auto images = trajectory(x0, h, traj_steps);
      for (std::size_t t = 0; t < images.size(); ++t) {
        write_image(fs::path(traj_dir) / step_name("x_", t, image_ext(x0)), images[t], maxval);
        write_image(fs::path(traj_dir) / step_name("spectrum_", t, image_ext(x0)),
                    log_magnitude_spectrum(images[t]), maxval);
        out << "t=" << t << " beta=" << fmt(static_cast<double>(t) / static_cast<double>(traj_steps))
            << " hf_energy=" << sci(high_frequency_energy(images[t])) << '\n';
      }
      return kExitOk;
    }

    if (est->parsed()) {
      require(!est_sharp.empty(), "--sharp");
      require(!est_blurred.empty(), "--blurred");
      const Image x = read_image(est_sharp);
      const Image y = read_image(est_blurred);
      const KernelEstimate estimate = estimate_from_images(x, y, WienerConfig{est_reg, !est_no_dc});
      const KernelExtraction window = transfer_to_kernel(estimate.transfer, est_size);
      const KernelValidityReport report = validate_kernel(estimate.transfer, est_size);
      if (!est_out.empty()) write_kernel_file(est_out, window.project(), std::numeric_limits<double>::quiet_NaN());
      print_validity(out, report);
      out << "excited_fraction=" << fmt(estimate.excited_fraction(), 6) << '\n'
          << "dc_status=" << dc_status_name(estimate.dc_status) << '\n';
      return kExitOk;
    }

    if (rest->parsed()) {
      if (rest_steps == 0) throw UsageError("--steps must be at least 1");
      if (!(rest_timeout > 0.0)) throw UsageError("--timeout must be positive");
      InferenceConfig cfg;
      cfg.steps = rest_steps;
      cfg.wiener.regularization = rest_reg;
      cfg.validate_each_step = rest_validate;
      cfg.validation_support = rest_support;
      cfg.record_intermediates = !rest_dump.empty();

      std::optional<std::pair<Kernel, double>> kernel;
      if (rest_kernel.given()) kernel = rest_kernel.resolve();
      if (rest_choice == "wiener" && !kernel) throw UsageError("--restorer wiener needs --sigma or --kernel");
      if (rest_choice != "wiener" && rest_choice != "identity" && !rest_choice.starts_with("external:"))
        throw UsageError("unknown restorer '" + rest_choice + "' (expected wiener, identity or external:<cmd>)");

      auto build_restorer = [&](const Image& y) {
        std::optional<TransferFunction> h;
        if (kernel) h = kernel_to_transfer(kernel->first, y.height(), y.width());
        if (rest_choice.starts_with("external:")) {
          ExternalRestorerConfig ext{rest_choice.substr(9),
                                     std::chrono::milliseconds(static_cast<long>(rest_timeout * 1000.0))};
          return external_restorer(std::move(ext));
        }
        return make_restorer(rest_choice, h ? &*h : nullptr, rest_snr);
      };

      if (!rest_batch.empty()) {
        require(!rest_out_dir.empty(), "--out-dir");
        fs::create_directories(rest_out_dir);
        std::vector<RestoreJob> jobs;
        for (const auto& entry : fs::directory_iterator(rest_batch)) {
          const auto ext = entry.path().extension();
          if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm"))
            jobs.push_back({entry.path(), fs::path(rest_out_dir) / entry.path().filename()});
        }
        std::sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) { return a.input < b.input; });
        // One restorer handle per job; library calls are thread-safe on independent inputs.
        const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
        std::vector<std::string> failures;
        for (std::size_t start = 0; start < jobs.size(); start += workers) {
          std::vector<std::future<std::string>> pending;
          for (std::size_t j = start; j < std::min(jobs.size(), start + workers); ++j) {
            pending.push_back(std::async(std::launch::async, [&, j] {
              try {
                const Image y = read_image(jobs[j].input);
                const auto restorer = build_restorer(y);
                write_image(jobs[j].output, infer(y, *restorer, cfg).restored, maxval);
                return std::string();
              } catch (const std::exception& e) {
                return jobs[j].input.string() + ": " + e.what();
              }
            }));
          }
          for (auto& f : pending)
            if (auto msg = f.get(); !msg.empty()) failures.push_back(std::move(msg));
        }
        out << "restored=" << jobs.size() - failures.size() << " failed=" << failures.size() << '\n';
        for (const auto& f : failures) err << "error: " << f << '\n';
        return failures.empty() ? kExitOk : kExitProcessing;
      }

      require(!rest_in.empty(), "--input");
      require(!rest_out.empty(), "--output");
      const Image y = read_image(rest_in);
      const auto restorer = build_restorer(y);
      const InferenceResult result = infer(y, *restorer, cfg);
      write_image(rest_out, result.restored, maxval);

      if (!rest_dump.empty()) {
        fs::create_directories(rest_dump);
        const char* ext = image_ext(y);
        for (const auto& step : result.steps) {
          write_image(fs::path(rest_dump) / step_name("x_t_", step.t, ext), *step.x_t, 65535);
          write_image(fs::path(rest_dump) / step_name("x0_hat_", step.t, ext), *step.x0_hat, 65535);
          write_image(fs::path(rest_dump) / step_name("x_t_spectrum_", step.t, ext), *step.x_t_spectrum, 65535);
          write_image(fs::path(rest_dump) / step_name("x0_hat_spectrum_", step.t, ext), *step.x0_hat_spectrum,
                      65535);
        }
      }
      for (const auto& step : result.steps) {
        out << "step=" << step.t << " beta=" << fmt(step.beta);
        if (step.t > 1) out << " excited_fraction=" << fmt(step.excited_fraction) << " dc=" << dc_status_name(step.dc_status);
        if (step.validity)
          out << " kernel_valid=" << (step.validity->is_valid ? "true" : "false")
              << " imag_residue=" << sci(step.validity->imag_residue)
              << " max_negative_tap=" << sci(step.validity->max_negative_tap);
        out << '\n';
      }
      if (!rest_reference.empty()) {
        const Image x0 = read_image(rest_reference);
        const MetricReport before = evaluate(y, x0);
        const MetricReport after = evaluate(result.restored, x0);
        out << "input_psnr=" << fmt(before.psnr_db) << '\n'
            << "input_ssim=" << fmt(before.ssim) << '\n'
            << "psnr=" << fmt(after.psnr_db) << '\n'
            << "ssim=" << fmt(after.ssim) << '\n';
      }
      return kExitOk;
    }

    if (gen->parsed()) {
      require(!gen_in.empty(), "--input");
      require(!gen_dir.empty(), "--out-dir");
      if (gen_count == 0) throw UsageError("--count must be at least 1");
      const auto [kernel, hint] = gen_kernel.resolve();
      const Image x0 = read_image(gen_in);
      const TransferFunction h = kernel_to_transfer(kernel, x0.height(), x0.width());
      const BetaLaw law = gen_law == "open" ? BetaLaw::kOpen : BetaLaw::kHalfOpen;
      const auto triples = gen_training_samples(x0, h, gen_count, law, gen_seed);

      fs::create_directories(gen_dir);
      write_kernel_file(fs::path(gen_dir) / "kernel.txt", kernel, hint);
      std::ostringstream manifest;
      manifest << std::setprecision(9);
      for (std::size_t i = 0; i < triples.size(); ++i) {
        std::ostringstream stem;
        stem << "triple_" << std::setw(4) << std::setfill('0') << i;
        const fs::path base = fs::path(gen_dir) / stem.str();
        write_tensor(base.string() + "_xbeta.cdt", image_to_tensor(triples[i].x_beta));
        write_tensor(base.string() + "_x0.cdt", image_to_tensor(triples[i].x0));
        write_tensor(base.string() + "_beta.cdt", scalar_tensor(static_cast<float>(triples[i].beta)));
        manifest << stem.str() << ' ' << triples[i].beta << '\n';
      }
      const std::string text = manifest.str();
      write_file_bytes(fs::path(gen_dir) / "manifest.txt",
                       std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
      out << "triples=" << triples.size() << '\n';
      return kExitOk;
    }

    if (eval->parsed()) {
      const Image a = read_image(eval_a);
      const Image b = read_image(eval_b);
      const MetricReport r = evaluate(a, b, eval_peak);
      out << "psnr=" << fmt(r.psnr_db) << '\n' << "ssim=" << fmt(r.ssim) << '\n' << "mse=" << sci(r.mse) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  } catch (const CLI::Error& e) {
    err << "error: bad config value: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitProcessing;
  }
  return kExitUsage;
}

}  // namespace convdiff
