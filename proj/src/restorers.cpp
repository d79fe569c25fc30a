#include "convdiff/restorers.hpp"

#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "convdiff/errors.hpp"
#include "convdiff/io.hpp"
#include "convdiff/spectral.hpp"

namespace convdiff {
namespace {

void require_shape(const Image& in, const Image& out, const std::string& who) {
  if (!in.same_shape(out)) throw RestorerError(who + " changed the image shape");
}

class OracleRestorer final : public Restorer {
 public:
  explicit OracleRestorer(Image reference) : reference_(std::move(reference)) { reference_.validate(); }
  std::string name() const override { return "oracle"; }
  std::string description() const override { return "returns a fixed ground-truth image"; }
  Image restore(const Image& x_beta, DegradationStrength) const override {
    require_shape(x_beta, reference_, name());
    return reference_;
  }

 private:
  Image reference_;
};

class IdentityRestorer final : public Restorer {
 public:
  std::string name() const override { return "identity"; }
  std::string description() const override { return "returns its input"; }
  Image restore(const Image& x_beta, DegradationStrength) const override { return x_beta; }
};

class WienerDeconvRestorer final : public Restorer {
 public:
  WienerDeconvRestorer(TransferFunction h, double snr_reg) : h_(std::move(h)), snr_reg_(snr_reg) {
    if (!(snr_reg_ > 0.0) || !std::isfinite(snr_reg_))
      throw InvalidInputError("deconvolution regularization must be positive, got " + std::to_string(snr_reg_));
  }
  std::string name() const override { return "wiener"; }
  std::string description() const override {
    return "Wiener deconvolution by H^beta, regularization " + std::to_string(snr_reg_);
  }

  Image restore(const Image& x_beta, DegradationStrength beta) const override {
    if (beta.beta() == 0.0) return x_beta;
    if (h_.rows() != x_beta.height() || h_.cols() != x_beta.width())
      throw RestorerError("wiener restorer transfer does not match the image size");
    const TransferFunction hb = fractional_power(h_, beta);
    TransferFunction inverse(hb.rows(), hb.cols());
    for (std::size_t i = 0; i < hb.size(); ++i) inverse[i] = std::conj(hb[i]) / (std::norm(hb[i]) + snr_reg_);
    return apply_transfer(x_beta, inverse).clamped();
  }

 private:
  TransferFunction h_;
  double snr_reg_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string read_text(const std::filesystem::path& p) {
  std::error_code ec;
  if (!std::filesystem::exists(p, ec)) return {};
  const auto bytes = read_file_bytes(p);
  std::string s(bytes.begin(), bytes.end());
  constexpr std::size_t kMax = 4000;
  if (s.size() > kMax) s = "..." + s.substr(s.size() - kMax);
  return s;
}

class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "convdiff-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw RestorerError("cannot create scratch directory");
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

class ExternalRestorer final : public Restorer {
 public:
  explicit ExternalRestorer(ExternalRestorerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.command.empty()) throw InvalidInputError("external restorer command is empty");
  }
  std::string name() const override { return "external"; }
  std::string description() const override { return "subprocess: " + cfg_.command; }

  Image restore(const Image& x_beta, DegradationStrength beta) const override {
    std::lock_guard lock(mutex_);
    ScratchDir scratch;
    const auto input = scratch.path() / "input.cdt";
    const auto output = scratch.path() / "output.cdt";
    const auto log = scratch.path() / "process.log";
    write_tensor(input, image_to_tensor(x_beta));

    std::ostringstream beta_text;
    beta_text.precision(17);
    beta_text << beta.beta();
    const std::string command = cfg_.command + " --input " + shell_quote(input.string()) + " --beta " +
                                beta_text.str() + " --output " + shell_quote(output.string()) + " > " +
                                shell_quote(log.string()) + " 2>&1";
    run(command, log);

    Image result;
    try {
      result = tensor_to_image(read_tensor(output));
    } catch (const Error& e) {
      throw RestorerError(std::string("malformed output tensor: ") + e.what(), read_text(log));
    }
    if (!result.same_shape(x_beta))
      throw RestorerError("external restorer returned a differently shaped image", read_text(log));
    return result;
  }

 private:
  void run(const std::string& command, const std::filesystem::path& log) const {
    const pid_t pid = fork();
    if (pid < 0) throw RestorerError("fork failed");
    if (pid == 0) {
      setpgid(0, 0);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid, pid);

    const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
    int status = 0;
    for (;;) {
      const pid_t done = waitpid(pid, &status, WNOHANG);
      if (done == pid) break;
      if (done < 0) throw RestorerError("waitpid failed");
      if (std::chrono::steady_clock::now() >= deadline) {
        kill(-pid, SIGKILL);
        waitpid(pid, &status, 0);
        throw RestorerError("external restorer timed out after " + std::to_string(cfg_.timeout.count()) + " ms",
                            read_text(log));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFSIGNALED(status))
      throw RestorerError("external restorer killed by signal " + std::to_string(WTERMSIG(status)), read_text(log));
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
      throw RestorerError("external restorer exited with code " + std::to_string(WEXITSTATUS(status)),
                          read_text(log));
  }

  ExternalRestorerConfig cfg_;
  mutable std::mutex mutex_;
};

}  // namespace

RestorerHandle oracle_restorer(Image reference) { return std::make_shared<OracleRestorer>(std::move(reference)); }

RestorerHandle identity_restorer() { return std::make_shared<IdentityRestorer>(); }

RestorerHandle wiener_deconv_restorer(TransferFunction h, double snr_reg) {
  return std::make_shared<WienerDeconvRestorer>(std::move(h), snr_reg);
}

RestorerHandle external_restorer(ExternalRestorerConfig cfg) {
  return std::make_shared<ExternalRestorer>(std::move(cfg));
}

RestorerHandle make_restorer(const std::string& choice, const TransferFunction* h, double snr_reg) {
  if (choice == "identity") return identity_restorer();
  if (choice == "wiener") {
    if (!h) throw InvalidInputError("the wiener restorer needs a blur kernel (--sigma or --kernel)");
    return wiener_deconv_restorer(*h, snr_reg);
  }
  constexpr std::string_view kExternal = "external:";
  if (choice.starts_with(kExternal)) return external_restorer({choice.substr(kExternal.size())});
  throw InvalidInputError("unknown restorer '" + choice + "' (expected wiener, identity or external:<cmd>)");
}

}  // namespace convdiff
