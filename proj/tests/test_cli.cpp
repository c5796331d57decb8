/**
 * @brief End-to-end runs of the fracharge binary.
 */
#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "fracharge/io.hpp"
#include "support.hpp"

using namespace fracharge;
using namespace fracharge::testing;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    Json json() const { return Json::parse(out); }
};

class Workdir {
public:
    Workdir() {
        dir_ = fs::temp_directory_path() / ("fracharge_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(dir_);
    }
    ~Workdir() { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }
    void write(const std::string& name, const std::string& text) const { write_text_file(path(name).string(), text); }

    Run run(const std::string& args) const {
        std::string cmd = "cd '" + dir_.string() + "' && '" + FRACHARGE_BIN + "' " + args + " 2>/dev/null";
        Run r;
        FILE* p = ::popen(cmd.c_str(), "r");
        REQUIRE(p != nullptr);
        char buf[4096];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
        int st = ::pclose(p);
        r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        return r;
    }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path dir_;
};

std::string pair_chain(std::int64_t x, std::int64_t y, int L) {
    ChainQ T(1, L, 0);
    T.add(Cell{{x}, 0}, 1);
    T.add(Cell{{y}, 0}, -1);
    return chain_to_json(T).dump();
}

}  // namespace

TEST_CASE("flatnorm of a point pair", "[cli]") {
    Workdir w;
    w.write("pair.json", pair_chain(0, 5, 2));
    auto r = w.run("flatnorm --chain pair.json --mode exact --cert cert.json");
    REQUIRE(r.code == 0);
    auto j = r.json();
    REQUIRE(j["status"] == "ok");
    REQUIRE(j["result"]["value"] == 1.25);
    REQUIRE(j["config"]["subcommand"] == "flatnorm");
    REQUIRE(j["config_hash"] == config_hash(j["config"]));
    auto cert = read_json_file(w.path("cert.json").string());
    REQUIRE(cert["config_hash"] == j["config_hash"]);
    auto T = chain_from_json<Rational>(read_json_file(w.path("pair.json").string()));
    auto S = chain_from_json<Rational>(cert["filling"]);
    auto R = chain_from_json<Rational>(cert["remainder"]);
    REQUIRE(R == T - boundary(S));

    w.write("far.json", pair_chain(0, 40, 2));
    auto far = w.run("flatnorm --chain far.json --mode float").json();
    REQUIRE(far["result"]["value"].get<double>() == Approx(2.0));
}

TEST_CASE("malformed input exits 2 and writes nothing", "[cli]") {
    Workdir w;
    w.write("bad.json", R"({"d":2,"L":1,"m":1,"cells":[{"anchor":[0],"axes":[1],"coeff":1}]})");
    auto r = w.run("flatnorm --chain bad.json --cert cert.json");
    REQUIRE(r.code == 2);
    auto j = r.json();
    REQUIRE(j["status"] == "error");
    REQUIRE(j["error_class"] == "validation");
    REQUIRE_FALSE(fs::exists(w.path("cert.json")));

    REQUIRE(w.run("flatnorm --chain missing.json").code == 2);
    REQUIRE(w.run("flatnorm --bogus").code == 2);
    REQUIRE(w.run("flatnorm --chain bad.json --mode sideways").code == 2);
}

TEST_CASE("young with a constant integrand and replay by config", "[cli]") {
    Workdir w;
    int L = 12;
    NodeBox data = cube_box(1, L, -1, 2);
    auto one = sample_form(1, L, 0, data, {[](const auto&) { return 1.0; }});
    auto g = sample_form(1, L, 0, data, {[](const auto& x) { return std::sin(2 * x[0]); }});
    w.write("one.csv", form_to_csv(one));
    w.write("g.csv", form_to_csv(g));
    auto r = w.run("young --f one.csv --g g.csv --alpha 1 --beta 1 --tol 1e-6 --report rep.csv");
    REQUIRE(r.code == 0);
    auto j = r.json();
    REQUIRE(j["result"]["value"].get<double>() == Approx(std::sin(2.0)).margin(1e-5));
    REQUIRE(fs::exists(w.path("rep.csv")));
    std::ifstream rep(w.path("rep.csv"));
    std::string first, second;
    std::getline(rep, first);
    std::getline(rep, second);
    REQUIRE(first == "# config_hash=" + j["config_hash"].get<std::string>());
    REQUIRE(second.rfind("level,term,partial_sum", 0) == 0);

    w.write("cfg.json", j.dump());
    auto again = w.run("run --config cfg.json");
    REQUIRE(again.code == 0);
    auto j2 = again.json();
    REQUIRE(j2["config_hash"] == j["config_hash"]);
    REQUIRE(j2["result"] == j["result"]);
}

TEST_CASE("csv output format", "[cli]") {
    Workdir w;
    w.write("pair.json", pair_chain(0, 2, 3));
    auto r = w.run("--format csv flatnorm --chain pair.json");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.rfind("# config_hash=", 0) == 0);
    REQUIRE(r.out.find("value,0.25") != std::string::npos);
}

TEST_CASE("critical exponents and exhausted ladders", "[cli]") {
    Workdir w;
    int L = 8;
    auto f = weierstrass_sample(WeierstrassSpec{std::pow(2.0, -0.7)}, 1, L, cube_box(1, L, -1, 2));
    WeierstrassSpec shifted{std::pow(2.0, -0.7)};
    shifted.phase0 = 0.4;
    w.write("f.csv", form_to_csv(f));
    w.write("g.csv", form_to_csv(weierstrass_sample(shifted, 1, L, cube_box(1, L, -1, 2))));
    auto crit = w.run("young --f f.csv --g f.csv --alpha 0.5 --beta 0.5 --report rep.csv");
    REQUIRE(crit.code == 2);
    REQUIRE(crit.json()["error_class"] == "critical_exponent");
    REQUIRE(crit.json().value("result", Json()).is_null());
    REQUIRE_FALSE(fs::exists(w.path("rep.csv")));

    auto ex = w.run("young --f f.csv --g g.csv --alpha 0.7 --beta 0.7 --tol 1e-14 --report rep.csv");
    REQUIRE(ex.code == 3);
    auto j = ex.json();
    REQUIRE(j["error_class"] == "resolution_exhausted");
    REQUIRE(j["report"]["rows"].size() > 0);
    REQUIRE_FALSE(fs::exists(w.path("rep.csv")));
}

TEST_CASE("gen then estimate", "[cli]") {
    Workdir w;
    auto g = w.run("gen --d 1 --L 14 --lo 0 --hi 1 --alpha 0.6 --out w.csv");
    REQUIRE(g.code == 0);
    REQUIRE(g.json()["result"]["alpha"].get<double>() == Approx(0.6));
    auto e = w.run("estimate --form w.csv");
    REQUIRE(e.code == 0);
    double a = e.json()["result"]["alpha_hat"].get<double>();
    REQUIRE(a >= 0.55);
    REQUIRE(a <= 0.65);

    auto g2 = w.run("gen --d 2 --L 4 --lo 0 --hi 1 --alpha 0.8 --direction 1,1 --out w2.json");
    REQUIRE(g2.code == 0);
    auto form = form_from_json(read_json_file(w.path("w2.json").string()));
    REQUIRE(form.d == 2);
    REQUIRE(form.box.size() == 17 * 17);
    REQUIRE(w.run("gen --d 1 --L 6 --alpha 0.5 --terms 2 --out x.csv").code == 2);
}

TEST_CASE("eval, mollify and ladder", "[cli]") {
    Workdir w;
    int L = 6;
    auto f = smooth_form(2, L, 1, cube_box(2, L, -2, 3), 0.5);
    w.write("f.json", form_to_json(f).dump());
    ChainD T = segment(2, L, {20, 30}, 0, 8);
    w.write("T.json", chain_to_json(T).dump());
    auto ev = w.run("eval --charge f.json --chain T.json");
    REQUIRE(ev.code == 0);
    REQUIRE(ev.json()["result"]["value"].get<double>() == Approx(FormCharge(f).evaluate(T)));

    auto mo = w.run("mollify --chain T.json --eps 0.0625 --mode exact --out S.json");
    REQUIRE(mo.code == 0);
    auto S = chain_from_json<Rational>(read_json_file(w.path("S.json").string()));
    REQUIRE(S == mollify_chain(chain_cast<Rational>(T), Mollifier(2, L, 0.0625)));

    auto ld = w.run("ladder --charge f.json --levels 3 --out-dir lad --lo 0,0 --hi 1,1");
    REQUIRE(ld.code == 0);
    for (int n = 0; n <= 3; ++n) REQUIRE(fs::exists(w.path("lad/level_00" + std::to_string(n) + ".json")));
    REQUIRE(w.run("ladder --charge f.json --levels 9 --out-dir lad2 --lo 0,0 --hi 1,1").code == 2);
}
