#include <doctest.h>

#include "chaoslab/experiments.hpp"

using namespace chaoslab;
using namespace chaoslab::exp;
using nlohmann::json;

namespace {

json base_config(const std::string& experiment) {
    json j;
    j["experiment"] = experiment;
    j["seed"] = 42;
    return j;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("sha1 known vectors") {
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
    CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config(json{{"experiment", "simulate"}}), ConfigError);  // no seed
    CHECK_THROWS_AS(parse_config(json{{"experiment", "warp"}, {"seed", 1}}), ConfigError);
    json j = base_config("simulate");
    j["n_list"] = {100, 50};  // not ascending
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = base_config("simulate");
    j["replicas"] = 0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = base_config("simulate");
    j["dt"] = -0.1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = base_config("simulate");
    j["typo_field"] = 1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    CHECK_NOTHROW(parse_config(base_config("simulate")));
}

TEST_CASE("config hash: stable under reordering, sensitive to semantics, blind to out/threads") {
    json a = base_config("expmoment");
    a["samples"] = 1000;
    a["kernel"] = {{"kind", "sine"}, {"kappa", 1.0}};
    // same fields in different insertion order
    json b;
    b["kernel"] = {{"kappa", 1.0}, {"kind", "sine"}};
    b["samples"] = 1000;
    b["seed"] = 42;
    b["experiment"] = "expmoment";
    CHECK(config_hash(a) == config_hash(b));

    json c = a;
    c["samples"] = 1001;
    CHECK(config_hash(a) != config_hash(c));

    json d = a;
    d["out"] = "elsewhere";
    d["threads"] = 7;
    CHECK(config_hash(a) == config_hash(d));
}

TEST_CASE("expmoment: zero kernel rows are exactly one against bound five") {
    json j = base_config("expmoment");
    j["kernel"] = {{"kind", "zero"}};
    j["n_list"] = {4, 8};
    j["samples"] = 500;
    const RunRecord rec = run_expmoment(parse_config(j));
    CHECK(rec.all_pass);
    const std::string& csv = rec.files.at("expmoment.csv");
    CHECK(csv.find("\n4,500,1,0,1,0,") != std::string::npos);
    CHECK(csv.find(",5,1,42") != std::string::npos);  // bound 5, pass, seed
}

TEST_CASE("combinatorics verify: clean pass, and the test hook forces a failure") {
    json j = base_config("combinatorics_verify");
    j["q_max"] = 5;
    j["p_max"] = 4;
    j["n_max"] = 4;
    j["k_max"] = 1;
    const RunRecord ok = run_combinatorics_verify(parse_config(j));
    CHECK(ok.all_pass);

    j["test_hook_break_formula"] = true;
    const RunRecord broken = run_combinatorics_verify(parse_config(j));
    CHECK_FALSE(broken.all_pass);
}

TEST_CASE("combinatorics verify: empty parameter grid gives an empty passing record") {
    json j = base_config("combinatorics_verify");
    j["q_max"] = 0;
    j["p_max"] = 0;
    j["n_max"] = 0;
    j["k_max"] = 0;
    const RunRecord rec = run_combinatorics_verify(parse_config(j));
    CHECK(rec.all_pass);
    CHECK(rec.files.at("combinatorics_verify.csv") == "lemma,parameters,exact,formula,bound,pass\n");
}

TEST_CASE("runs are byte-identical for a fixed seed") {
    json j = base_config("simulate");
    j["n_list"] = {32};
    j["replicas"] = 3;
    j["dt"] = 0.01;
    j["t_end"] = 0.1;
    j["record_every"] = 5;
    const RunRecord a = run_simulate(parse_config(j));
    const RunRecord b = run_simulate(parse_config(j));
    CHECK(a.files == b.files);
    j["seed"] = 43;
    const RunRecord c = run_simulate(parse_config(j));
    CHECK(a.files != c.files);
}

TEST_CASE("chaos study on a tiny configuration emits sorted rows and reproduces") {
    json j = base_config("chaos_study");
    j["n_list"] = {16, 32};
    j["replicas"] = 3;
    j["dt"] = 0.01;
    j["t_end"] = 0.05;
    j["exp_samples"] = 200;
    j["grid"] = {{"gx", 32}, {"gv", 33}, {"vmax", 6.0}};
    j["bins"] = {{"x", 4}, {"v", 4}};
    const RunRecord a = run_experiment(parse_config(j));
    const std::string& csv = a.files.at("chaos_study.csv");
    CHECK(csv.find("\n16,") != std::string::npos);
    CHECK(csv.find("\n32,") != std::string::npos);
    CHECK(csv.find("N,replicas,samples,l1_k1") == 0);
    const RunRecord b = run_experiment(parse_config(j));
    CHECK(a.files == b.files);
}

TEST_CASE("vlasov run: audits stay within guards and snapshot carries the header") {
    json j = base_config("vlasov_run");
    j["grid"] = {{"gx", 32}, {"gv", 49}, {"vmax", 6.0}};
    j["dt"] = 0.005;
    j["t_end"] = 0.05;
    j["law"] = {{"kind", "cosine_maxwellian"}, {"sigma", 1.0}, {"amplitude", 0.3}};
    const RunRecord rec = run_vlasov(parse_config(j));
    CHECK(rec.all_pass);
    CHECK(rec.files.at("vlasov_snapshot.csv").rfind("gx,gv,vmax,time\n32,49,6,", 0) == 0);
    CHECK(rec.files.count("vlasov_monitor.csv") == 1);
}

TEST_CASE("weakstrong run: entropy targets hit, linear scaling, identical data at zero") {
    json j = base_config("weakstrong");
    j["grid"] = {{"gx", 32}, {"gv", 49}, {"vmax", 6.0}};
    j["dt"] = 0.004;
    j["t_end"] = 0.2;
    j["h0_list"] = {1e-2, 1e-3};
    j["record_every"] = 10;
    j["law"] = {{"kind", "cosine_maxwellian"}, {"sigma", 1.0}, {"amplitude", 0.3}};
    const RunRecord rec = run_weakstrong(parse_config(j));
    CHECK(rec.all_pass);
    const std::string& summary = rec.files.at("weakstrong_summary.csv");
    CHECK(summary.find("linear_scaling_factor") != std::string::npos);
    CHECK(summary.find("identical_data_sup_H") != std::string::npos);
}

TEST_CASE("cancellation verify on a reduced grid passes") {
    json j = base_config("cancellation_verify");
    j["samples"] = 20000;
    j["cancel_mc_n"] = {10};
    j["scan_n"] = 2;
    j["scan_p"] = 2;
    const RunRecord rec = run_cancellation_verify(parse_config(j));
    CHECK(rec.all_pass);
    CHECK(rec.files.at("cancellation_verify.csv").find("second_moment_bound") != std::string::npos);
}

}  // TEST_SUITE
