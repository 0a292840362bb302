#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("noether_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static Outcome run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(NOETHER_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

  static fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static fs::path examples() {
    const fs::path e = dir_ / "examples";
    if (!fs::exists(e / "pendulum.sys")) run("examples --install " + e.string());
    return e;
  }

  static std::string file(const std::string& name) { return (examples() / name).string(); }

  static inline fs::path dir_;
};

const char* kOscillatorHead = R"({
  "name": "t", "n": 2, "coordinates": ["q1", "q2", "p1", "p2"], "parameters": {"Omega": 1},
)";

TEST_F(CliTest, ExamplesInstallIsIdempotent) {
  const fs::path e = dir_ / "install";
  Outcome a = run("examples --install " + e.string());
  ASSERT_EQ(a.code, 0) << a.err;
  const std::string first = slurp(e / "iso_oscillator.sys");
  Outcome b = run("examples --install " + e.string());
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(e / "iso_oscillator.sys"), first);
  for (const char* f : {"pendulum.sys", "aniso_oscillator.sys", "iso_oscillator.sys", "iso_oscillator_unit.sys"}) {
    EXPECT_TRUE(fs::exists(e / f)) << f;
    EXPECT_EQ(run("check " + (e / f).string()).code, 0) << f;
  }
}

TEST_F(CliTest, ExamplesInstallToUnwritableTarget) {
  // A path below a regular file cannot be created, even by a privileged user.
  const fs::path blocker = write("blocker", "x");
  Outcome r = run("examples --install " + (blocker / "sub").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cannot write"), std::string::npos);
}

TEST_F(CliTest, CheckPrintsHamiltonEquations) {
  Outcome r = run("check " + file("pendulum.sys"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dtheta/dt = p_theta"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("dp_phi/dt = 0"), std::string::npos) << r.out;
}

TEST_F(CliTest, CheckRejectsDegenerateForm) {
  const fs::path p = write("degenerate.sys", std::string(kOscillatorHead) +
                                                 R"("symplectic": [{"coeff": "1", "i": "q1", "j": "q2"}],
  "hamiltonian": "p1^2/2"})");
  Outcome r = run("check " + p.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("degenerate at probes"), std::string::npos) << r.err;
}

TEST_F(CliTest, CheckRejectsOpenForm) {
  const fs::path p = write("open.sys", std::string(kOscillatorHead) +
                                           R"("symplectic": [{"coeff": "q2", "i": 0, "j": 2}, {"coeff": "1", "i": 1, "j": 3}],
  "hamiltonian": "p1^2/2"})");
  Outcome r = run("check " + p.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not closed"), std::string::npos) << r.err;
}

TEST_F(CliTest, SyntaxErrorsExitTwo) {
  const fs::path bad_expr = write("bad_expr.sys", std::string(kOscillatorHead) + R"("hamiltonian": "p1^2 +"})");
  Outcome a = run("check " + bad_expr.string());
  EXPECT_EQ(a.code, 2);
  EXPECT_NE(a.err.find("syntax error"), std::string::npos) << a.err;
  const fs::path bad_json = write("bad_json.sys", "{\"n\": 2,,}");
  Outcome b = run("check " + bad_json.string());
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("syntax error"), std::string::npos) << b.err;
  const fs::path unknown = write("unknown.sys", std::string(kOscillatorHead) + R"("hamiltonian": "p1^2 + r"})");
  EXPECT_EQ(run("check " + unknown.string()).code, 2);
  EXPECT_EQ(run("check " + (dir_ / "missing.sys").string()).code, 2);
}

TEST_F(CliTest, ClassifyBundledFiles) {
  Outcome p = run("classify " + file("pendulum.sys"));
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_NE(p.out.find("Y: Noether [noether]; conserved: p_phi"), std::string::npos) << p.out;
  Outcome i = run("classify --symmetry Y " + file("iso_oscillator.sys"));
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_NE(i.out.find("Y: OmegaEigenOrderN{N=2, C=4} [omega-eigen]; conserved: p1*p2 + Omega^2*q1*q2"), std::string::npos)
      << i.out;
  Outcome a = run("classify " + file("aniso_oscillator.sys"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("Y1: GeometricNonHamiltonian{Omega1} [geometric-symmetry]; conserved (trivial): Omega1"),
            std::string::npos)
      << a.out;
}

TEST_F(CliTest, ClassifyUnknownSymmetry) {
  Outcome r = run("classify --symmetry Nope " + file("pendulum.sys"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Nope"), std::string::npos) << r.err;
}

TEST_F(CliTest, StructuredOutputIsStableAndComplete) {
  for (const char* f : {"pendulum.sys", "aniso_oscillator.sys", "iso_oscillator.sys"}) {
    Outcome a = run("--seed 42 --format structured classify " + file(f));
    Outcome b = run("--seed 42 --format structured classify " + file(f));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << f;
    const auto j = nlohmann::json::parse(a.out);
    for (const char* k : {"tool_version", "seed", "system", "candidates"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["seed"], 42);
  }
}

TEST_F(CliTest, VerifyDefaults) {
  Outcome r = run("verify " + file("pendulum.sys"));
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("drift h:"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST_F(CliTest, VerifyUserQuantities) {
  Outcome bad = run("verify --quantity q1 " + file("iso_oscillator.sys"));
  EXPECT_EQ(bad.code, 1) << bad.out << bad.err;
  EXPECT_NE(bad.out.find("drift q1"), std::string::npos) << bad.out;
  Outcome good = run("verify --quantity \"p1*p2 + Omega^2*q1*q2\" " + file("iso_oscillator.sys"));
  EXPECT_EQ(good.code, 0) << good.out << good.err;
  Outcome unknown = run("verify --quantity \"q1 + r\" " + file("iso_oscillator.sys"));
  EXPECT_EQ(unknown.code, 2);
}

TEST_F(CliTest, VerifyDumpsTrajectory) {
  const fs::path out = dir_ / "traj.txt";
  Outcome r = run("verify --t-final 0.01 --dt 0.005 --method implicit_midpoint --dump " + out.string() + " " +
              file("iso_oscillator.sys"));
  EXPECT_EQ(r.code, 0) << r.err;
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "# t q1 q2 p1 p2");
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("classify").code, 2);
  EXPECT_EQ(run("--bogus classify " + file("pendulum.sys")).code, 2);
  EXPECT_EQ(run("--format xml classify " + file("pendulum.sys")).code, 2);
  EXPECT_EQ(run("verify --method euler " + file("pendulum.sys")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

}  // namespace
