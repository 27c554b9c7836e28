#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include "doctest.h"
#include "vtsim/experiments.hpp"
#include "vtsim/netlist.hpp"
#include "vtsim/util.hpp"

using namespace vtsim;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

fs::path work_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("vtsim_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    fs::path out = dir / "stdout.txt";
    fs::path err = dir / "stderr.txt";
    std::string cmd = "cd '" + dir.string() + "' && '" + VTSIM_CLI_PATH + "' " + args + " > '" +
                      out.string() + "' 2> '" + err.string() + "'";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_text_file(out.string());
    r.err = read_text_file(err.string());
    return r;
}

std::string fixture(const std::string& name) {
    return std::string(VTSIM_FIXTURE_DIR) + "/" + name;
}

// Snapshot of every regular file under dir, minus the capture files.
std::set<std::string> file_snapshot(const fs::path& dir) {
    std::set<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), dir).string();
        if (rel == "stdout.txt" || rel == "stderr.txt") continue;
        files.insert(rel);
    }
    return files;
}

}  // namespace

TEST_CASE("help output enumerates every subcommand and key flag") {
    auto dir = work_dir("help");
    RunResult top = run_cli("--help", dir);
    CHECK(top.exit_code == 0);
    for (const char* name : {"sim", "gate", "exp", "measure"}) {
        CHECK(top.out.find(name) != std::string::npos);
    }
    RunResult sim = run_cli("sim --help", dir);
    for (const char* flag : {"--out", "--max-step", "--lte-tol", "--integration", "--gnuplot"}) {
        CHECK(sim.out.find(flag) != std::string::npos);
    }
    RunResult gate = run_cli("gate --help", dir);
    for (const char* flag : {"--van", "--vap", "--vdd", "--load", "--freq", "--card"}) {
        CHECK(gate.out.find(flag) != std::string::npos);
    }
    RunResult exp = run_cli("exp --help", dir);
    for (const char* flag : {"--config", "--card", "--jobs", "--gnuplot"}) {
        CHECK(exp.out.find(flag) != std::string::npos);
    }
    RunResult meas = run_cli("measure --help", dir);
    for (const char* flag : {"--input", "--output", "--supply", "--vdd", "--window"}) {
        CHECK(meas.out.find(flag) != std::string::npos);
    }
}

TEST_CASE("sim tran on the RC fixture: CSV schema and analytic endpoint") {
    auto dir = work_dir("rc");
    RunResult r = run_cli("sim '" + fixture("rc.sp") + "' tran 5u -o out --max-step 50n", dir);
    REQUIRE(r.exit_code == 0);

    std::string csv = read_text_file((dir / "out" / "tran.csv").string());
    CHECK(csv.rfind("time,", 0) == 0);  // time column first

    // Final value within 0.1% of the analytic 0.2(1 - e^-5).
    Table t = Table::from_csv(csv);
    double v_final = t.num(t.rows.size() - 1, "out");
    double expected = 0.2 * (1.0 - std::exp(-5.0));
    CHECK(std::fabs(v_final - expected) / expected < 1e-3);

    // Nothing written outside the output directory.
    auto files = file_snapshot(dir);
    for (const auto& f : files) {
        CHECK(f.rfind("out/", 0) == 0);
    }
}

TEST_CASE("sim op / dc subcommands produce solution files") {
    auto dir = work_dir("opdc");
    RunResult op = run_cli("sim '" + fixture("divider.sp") + "' op -o out", dir);
    CHECK(op.exit_code == 0);
    Table op_table = Table::from_csv(read_text_file((dir / "out" / "op.csv").string()));
    bool found_mid = false;
    for (std::size_t row = 0; row < op_table.rows.size(); ++row) {
        if (op_table.cell(row, "name") == "mid") {
            found_mid = true;
            CHECK(op_table.num(row, "value") == doctest::Approx(0.1).epsilon(1e-6));
        }
    }
    CHECK(found_mid);

    RunResult dc = run_cli("sim '" + fixture("divider.sp") + "' dc vdd 0 0.2 0.1 -o out", dir);
    CHECK(dc.exit_code == 0);
    Table t = Table::from_csv(read_text_file((dir / "out" / "dc.csv").string()));
    CHECK(t.rows.size() == 3);
    CHECK(t.num(2, "mid") == doctest::Approx(0.1));
}

TEST_CASE("solver non-convergence exits 3") {
    auto dir = work_dir("nonconv");
    // The chain needs ~25 damped Newton iterations; a budget of 10 defeats
    // the fallbacks too.
    RunResult r = run_cli("sim '" + fixture("diode_chain.sp") + "' op -o out --max-iters 10",
                          dir);
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("no convergence") != std::string::npos);

    RunResult ok = run_cli("sim '" + fixture("diode_chain.sp") + "' op -o out", dir);
    CHECK(ok.exit_code == 0);
}

TEST_CASE("malformed netlist exits 2 with diagnostics on stderr") {
    auto dir = work_dir("malformed");
    RunResult r = run_cli("sim '" + fixture("malformed.sp") + "' op -o out", dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("diagnostics") != std::string::npos);
    CHECK(r.err.find(":") != std::string::npos);  // line:column markers
}

TEST_CASE("gate subcommand writes a netlist that reparses and simulates") {
    auto dir = work_dir("gate");
    RunResult r = run_cli("gate inverter vtmos --van 0.2 --card '" VTSIM_MODEL_CARD
                          "' -o inv.sp",
                          dir);
    REQUIRE(r.exit_code == 0);

    ParseResult parsed = parse_netlist_file((dir / "inv.sp").string());
    REQUIRE(parsed.ok());
    int mosfets = 0, bias = 0;
    for (const auto& e : parsed.circuit.elements) {
        if (std::holds_alternative<Mosfet>(e)) ++mosfets;
        if (const auto* v = std::get_if<VSource>(&e)) {
            if (v->name.rfind("vb", 0) == 0) ++bias;
        }
    }
    CHECK(mosfets == 2);
    CHECK(bias == 2);

    RunResult sim = run_cli("sim inv.sp tran 20u -o simout", dir);
    CHECK(sim.exit_code == 0);

    // DTMOS output equals VTMOS at zero offset up to the zero-valued sources.
    RunResult dt = run_cli("gate inverter dtmos --card '" VTSIM_MODEL_CARD "' -o dt.sp", dir);
    RunResult vt0 = run_cli("gate inverter vtmos --van 0 --card '" VTSIM_MODEL_CARD
                            "' -o vt0.sp",
                            dir);
    CHECK(dt.exit_code == 0);
    CHECK(vt0.exit_code == 0);
    ParseResult dtp = parse_netlist_file((dir / "dt.sp").string());
    ParseResult vtp = parse_netlist_file((dir / "vt0.sp").string());
    int vt_zero_sources = 0;
    for (const auto& e : vtp.circuit.elements) {
        if (const auto* v = std::get_if<VSource>(&e)) {
            if (v->name.rfind("vb", 0) == 0 && std::get<DcSpec>(v->spec).volts == 0.0)
                ++vt_zero_sources;
        }
    }
    CHECK(vt_zero_sources == 2);
    CHECK(dtp.circuit.elements.size() + 2 == vtp.circuit.elements.size());
}

TEST_CASE("gate bias above the supply exits 2") {
    auto dir = work_dir("bias");
    RunResult r = run_cli("gate inverter vtmos --van 0.3 --vdd 0.2 --card '" VTSIM_MODEL_CARD
                          "' -o inv.sp",
                          dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("bias") != std::string::npos);
    CHECK(!fs::exists(dir / "inv.sp"));
}

TEST_CASE("exp subcommand: unknown id exits 2 listing the valid ids") {
    auto dir = work_dir("expbad");
    RunResult r = run_cli("exp not-an-experiment -o out", dir);
    CHECK(r.exit_code == 2);
    for (const auto& id : known_experiments()) {
        CHECK(r.err.find(id) != std::string::npos);
    }
}

TEST_CASE("exp vtc runs end to end and reruns byte-identically") {
    auto dir = work_dir("expvtc");
    write_text_file((dir / "vtc.conf").string(),
                    "experiment = vtc\ncard = " VTSIM_MODEL_CARD
                    "\nvan = 0, 0.2\nout = out1\n");
    RunResult a = run_cli("exp vtc --config vtc.conf --gnuplot", dir);
    CHECK(a.exit_code == 0);
    CHECK(a.out.find("PASS vtc-margins-positive") != std::string::npos);
    CHECK(fs::exists(dir / "out1" / "vtc.gp"));

    RunResult b = run_cli("exp vtc --config vtc.conf -o out2", dir);
    CHECK(b.exit_code == 0);
    CHECK(read_text_file((dir / "out1" / "vtc.csv").string()) ==
          read_text_file((dir / "out2" / "vtc.csv").string()));
    CHECK(read_text_file((dir / "out1" / "verdicts.txt").string()) ==
          read_text_file((dir / "out2" / "verdicts.txt").string()));
}

TEST_CASE("measure subcommand reports delays from a waveform file") {
    auto dir = work_dir("measure");
    RunResult sim = run_cli("sim '" + fixture("inverter.sp") + "' tran 20u -o out", dir);
    REQUIRE(sim.exit_code == 0);
    RunResult m = run_cli(
        "measure out/tran.csv --input in --output out --supply 'i(vdd)' --vdd 0.2 "
        "--window 10u:20u -o rep",
        dir);
    CHECK(m.exit_code == 0);
    CHECK(m.out.find("tp_avg") != std::string::npos);
    CHECK(fs::exists(dir / "rep" / "report.csv"));

    RunResult bad = run_cli("measure out/tran.csv --input nosuch --output out", dir);
    CHECK(bad.exit_code == 2);
}

TEST_CASE("gnuplot helper writes a plot script referencing the CSV") {
    auto dir = work_dir("gnuplot");
    RunResult r = run_cli("sim '" + fixture("rc.sp") + "' tran 5u -o out --gnuplot", dir);
    REQUIRE(r.exit_code == 0);
    std::string gp = read_text_file((dir / "out" / "tran.gp").string());
    CHECK(gp.find("tran.csv") != std::string::npos);
    CHECK(gp.find("plot") != std::string::npos);
}
