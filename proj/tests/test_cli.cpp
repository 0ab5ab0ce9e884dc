#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "causalboot/csv.hpp"
#include "causalboot/synthdata.hpp"

namespace fs = std::filesystem;

namespace {

struct run_result {
    int exit_code;
    std::string output;  // stdout + stderr
};

run_result run_cli(const std::string& args) {
    static int counter = 0;
    std::string log = (fs::temp_directory_path() / ("cb_cli_" + std::to_string(counter++) + ".log"))
                          .string();
    std::string cmd = std::string(CLI_BIN) + " " + args + " > " + log + " 2>&1";
    int status = std::system(cmd.c_str());
    run_result r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream out;
    out << in.rdbuf();
    r.output = out.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string tmpdir(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("generate gauss-backdoor").exit_code == 2);  // missing --out
    CHECK(run_cli("nonsense").exit_code == 2);
    auto r = run_cli("ate --data x.csv --graph g.cbg --y0 1 --y1 2 --method sorcery");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("unknown method") != std::string::npos);

    // plan method without a plan file, with and without a graph
    auto r2 = run_cli("bootstrap --data x.csv --method plan --out o.csv");
    CHECK(r2.exit_code == 2);
    CHECK(r2.output.find("--plan") != std::string::npos);
}

TEST_CASE("generate writes three environments and is reproducible") {
    auto dir1 = tmpdir("cb_gen1");
    auto dir2 = tmpdir("cb_gen2");
    auto r1 = run_cli("generate gauss-backdoor --n 200 --seed 7 --out " + dir1);
    REQUIRE(r1.exit_code == 0);
    for (const char* f : {"e1.csv", "e2.csv", "e3.csv", "graph.cbg"})
        CHECK(fs::exists(fs::path(dir1) / f));
    auto r2 = run_cli("generate gauss-backdoor --n 200 --seed 7 --out " + dir2);
    REQUIRE(r2.exit_code == 0);
    for (const char* f : {"e1.csv", "e2.csv", "e3.csv"})
        CHECK(slurp((fs::path(dir1) / f).string()) == slurp((fs::path(dir2) / f).string()));
}

TEST_CASE("bootstrap produces a provenance-tagged deconfounded table") {
    auto dir = tmpdir("cb_boot");
    REQUIRE(run_cli("generate gauss-backdoor --n 150 --seed 3 --out " + dir).exit_code == 0);
    auto out = (fs::path(dir) / "star.csv").string();
    auto r = run_cli("bootstrap --data " + dir + "/e1.csv --graph " + dir +
                     "/graph.cbg --method backdoor --seed 5 --out " + out);
    REQUIRE(r.exit_code == 0);
    auto d = causalboot::read_dataset_csv(out);
    CHECK(d.n_rows() == 150);
    CHECK(d.has("__src_row"));
    CHECK(d.has("x1"));
    CHECK(d.has("y"));
    for (int src : d.discrete_column("__src_row")) {
        CHECK(src >= 1);
        CHECK(src <= 150);
    }
    auto meta = causalboot::read_sidecar(causalboot::sidecar_path_for(out));
    CHECK(meta.at("method") == "backdoor");
    CHECK(meta.count("floor_hits") == 1);

    SECTION("split-sample adds provenance-disjoint folds") {
        auto out2 = (fs::path(dir) / "star2.csv").string();
        auto r2 = run_cli("bootstrap --data " + dir + "/e1.csv --graph " + dir +
                          "/graph.cbg --method backdoor --seed 5 --split-sample 3 --out " + out2);
        REQUIRE(r2.exit_code == 0);
        auto d2 = causalboot::read_dataset_csv(out2);
        REQUIRE(d2.has("__fold"));
        std::map<int, std::set<int>> folds_of;
        for (size_t i = 0; i < d2.n_rows(); ++i)
            folds_of[d2.dvalue("__src_row", i)].insert(d2.dvalue("__fold", i));
        for (const auto& [src, fs_] : folds_of) CHECK(fs_.size() == 1);
    }
}

TEST_CASE("criteria violations exit with 3 and name the clause") {
    auto dir = tmpdir("cb_crit");
    // a graph with a direct y -> x edge cannot satisfy the front-door criterion
    std::ofstream(fs::path(dir) / "bad.cbg")
        << "var u continuous 1\nvar y discrete 2\nvar z discrete 2\nvar x continuous 1\n"
        << "latent u\n"
        << "edge u -> y\nedge u -> x\nedge y -> z\nedge z -> x\nedge y -> x\n"
        << "role target y\nrole effect x\nrole mediator z\n";
    auto r = run_cli("validate --graph " + dir + "/bad.cbg --method frontdoor");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("intercept") != std::string::npos);

    // back-door with a latent adjustment set
    std::ofstream(fs::path(dir) / "latent.cbg")
        << "var u discrete 2\nvar y discrete 2\nvar x continuous 1\nlatent u\n"
        << "edge u -> y\nedge u -> x\nedge y -> x\n"
        << "role target y\nrole effect x\nrole adjust u\n";
    auto r2 = run_cli("validate --graph " + dir + "/latent.cbg --method backdoor");
    CHECK(r2.exit_code == 3);
    CHECK(r2.output.find("latent") != std::string::npos);

    SECTION("--force bypasses the check at bootstrap time") {
        auto gen = run_cli("generate gauss-backdoor --n 100 --seed 1 --out " + dir);
        REQUIRE(gen.exit_code == 0);
        std::ofstream(fs::path(dir) / "forced.cbg")
            << "var u discrete 2\nvar y discrete 2\nvar z discrete 2\n"
            << "var x1 continuous 1\nvar x2 continuous 1\nlatent u\n"
            << "edge u -> y\nedge y -> z\nedge z -> x1\nedge u -> x2\n"
            << "role target y\nrole effect x1,x2\nrole adjust u\n";
        auto blocked = run_cli("bootstrap --data " + dir + "/e1.csv --graph " + dir +
                               "/forced.cbg --method backdoor --out " + dir + "/f.csv");
        CHECK(blocked.exit_code == 3);
        auto forced = run_cli("bootstrap --data " + dir + "/e1.csv --graph " + dir +
                              "/forced.cbg --method backdoor --force --out " + dir + "/f.csv");
        CHECK(forced.exit_code == 0);
    }
}

TEST_CASE("smoothed mode refuses discrete effect columns") {
    auto dir = tmpdir("cb_smooth");
    std::ofstream(fs::path(dir) / "d.csv") << "y,k\n1,1\n1,2\n2,1\n2,2\n";
    std::ofstream(fs::path(dir) / "g.cbg")
        << "var y discrete 2\nvar k discrete 2\nedge y -> k\n"
        << "role target y\nrole effect k\n";
    auto r = run_cli("bootstrap --data " + dir + "/d.csv --graph " + dir +
                     "/g.cbg --method truncated --mode smoothed --out " + dir + "/o.csv");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("smoothed") != std::string::npos);
}

TEST_CASE("ate subcommand reproduces the worked contrast") {
    auto dir = tmpdir("cb_ate");
    std::ofstream(fs::path(dir) / "toy.csv")
        << "y,u,x\n1,1,1.0\n1,1,3.0\n1,2,2.0\n2,1,0.0\n2,2,5.0\n2,2,1.0\n";
    std::ofstream(fs::path(dir) / "toy.cbg")
        << "var y discrete 2\nvar u discrete 2\nvar x continuous 1\n"
        << "edge u -> y\nedge u -> x\nedge y -> x\n"
        << "role target y\nrole effect x\nrole adjust u\n";
    auto r = run_cli("ate --data " + dir + "/toy.csv --graph " + dir +
                     "/toy.cbg --method backdoor --y0 2 --y1 1 --out " + dir + "/ate.csv");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("x,1.5,2,0.5") != std::string::npos);
    CHECK(slurp(dir + "/ate.csv").find("x,1.5,2,0.5") != std::string::npos);

    auto same = run_cli("ate --data " + dir + "/toy.csv --graph " + dir +
                        "/toy.cbg --method backdoor --y0 1 --y1 1");
    REQUIRE(same.exit_code == 0);
    CHECK(same.output.find("x,2,2,0") != std::string::npos);
}

TEST_CASE("experiment subcommand writes a report directory") {
    auto dir = tmpdir("cb_exp");
    auto r = run_cli("experiment gauss-backdoor --n 250 --replicates 2 --seed 4 --out " + dir);
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("deconfounded") != std::string::npos);
    CHECK(fs::exists(fs::path(dir) / "report.csv"));
    CHECK(fs::exists(fs::path(dir) / "report.meta"));
    auto report = slurp((fs::path(dir) / "report.csv").string());
    CHECK(report.find("record,replicate,confounded_e2") == 0);
    CHECK(report.find("\nmean,,") != std::string::npos);
}

TEST_CASE("config files mirror flags with flag precedence") {
    auto dir = tmpdir("cb_cfg");
    std::ofstream(fs::path(dir) / "run.conf") << "[generate]\nn = 120\nseed = 9\nout = \"" << dir
                                              << "\"\n";
    auto r = run_cli("--config " + dir + "/run.conf generate gauss-backdoor");
    REQUIRE(r.exit_code == 0);
    auto d = causalboot::read_dataset_csv(dir + "/e1.csv");
    CHECK(d.n_rows() == 120);

    // flags override the file
    auto r2 = run_cli("--config " + dir + "/run.conf generate gauss-backdoor --n 80");
    REQUIRE(r2.exit_code == 0);
    CHECK(causalboot::read_dataset_csv(dir + "/e1.csv").n_rows() == 80);
}

TEST_CASE("data failures exit with 4") {
    auto r = run_cli("bootstrap --data /nonexistent.csv --graph /also-missing.cbg --out /tmp/x.csv");
    CHECK(r.exit_code == 2);  // the graph file is a config input
    auto dir = tmpdir("cb_e4");
    std::ofstream(fs::path(dir) / "g.cbg")
        << "var y discrete 2\nvar u discrete 2\nvar x continuous 1\n"
        << "edge u -> y\nedge u -> x\nedge y -> x\n"
        << "role target y\nrole effect x\nrole adjust u\n";
    auto r2 = run_cli("bootstrap --data /nonexistent.csv --graph " + dir + "/g.cbg --out " + dir +
                      "/o.csv");
    CHECK(r2.exit_code == 4);

    // estimable graph but a column the data does not have
    std::ofstream(fs::path(dir) / "d.csv") << "y,q\n1,0.5\n2,0.25\n1,0.5\n2,0.25\n";
    auto r3 = run_cli("bootstrap --data " + dir + "/d.csv --graph " + dir + "/g.cbg --force --out " +
                      dir + "/o.csv");
    CHECK(r3.exit_code == 4);
    CHECK(r3.output.find("unknown variable") != std::string::npos);
}

TEST_CASE("blob image format round-trips through generate and bootstrap") {
    auto dir = tmpdir("cb_blob_cli");
    REQUIRE(run_cli("make-idx --out-images " + dir + "/img.idx --out-labels " + dir +
                    "/lab.idx --per-class 100 --seed 3")
                .exit_code == 0);
    auto gen = run_cli("generate mnist-backdoor --n 20 --seed 6 --mnist-images " + dir +
                       "/img.idx --mnist-labels " + dir + "/lab.idx --image-format blob --out " +
                       dir);
    REQUIRE(gen.exit_code == 0);
    CHECK(fs::exists(fs::path(dir) / "e1.meta.blob"));
    auto d = causalboot::read_dataset_csv(dir + "/e1.csv");
    REQUIRE(d.has("x"));
    CHECK(d.info("x").dim == 784);
    CHECK(d.n_rows() == 20);

    auto boot = run_cli("bootstrap --data " + dir + "/e1.csv --graph " + dir +
                        "/graph.cbg --method backdoor --seed 2 --out " + dir + "/star.csv");
    REQUIRE(boot.exit_code == 0);
    CHECK(fs::exists(fs::path(dir) / "star.meta.blob"));
    auto star = causalboot::read_dataset_csv(dir + "/star.csv");
    CHECK(star.info("x").dim == 784);
    CHECK(star.n_rows() == 20);
}

TEST_CASE("make-idx emits a loadable synthetic pool") {
    auto dir = tmpdir("cb_idx");
    auto r = run_cli("make-idx --out-images " + dir + "/img.idx --out-labels " + dir +
                     "/lab.idx --per-class 15 --seed 2");
    REQUIRE(r.exit_code == 0);
    auto pool = causalboot::load_mnist_idx(dir + "/img.idx", dir + "/lab.idx");
    CHECK(pool.size() == 30);
}
