/**
 * @brief fracharge command-line front-end.
 *
 * Every run prints {"status", "config", "config_hash", "result"} to stdout. The config
 * holds the subcommand and every option value, so `fracharge run --config file` replays it.
 * Exit codes: 0 ok, 2 validation, 3 resolution exhausted, 4 solver failure, 1 other.
 */
#include <iostream>

#include <CLI11.hpp>

#include "fracharge/fracharge.hpp"

using namespace fracharge;
namespace fs = std::filesystem;

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ValidationError("bad number '" + tok + "' in list");
        }
    }
    return out;
}

std::vector<std::string> split_paths(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

/// ambient coordinate lists -> node box at level L
NodeBox box_from_coords(int d, int L, const std::string& lo, const std::string& hi) {
    auto a = parse_list(lo), b = parse_list(hi);
    if (static_cast<int>(a.size()) != d || static_cast<int>(b.size()) != d) throw ValidationError("box corners need d coordinates");
    NodeBox box;
    box.d = d;
    double s = std::ldexp(1.0, L);
    for (int i = 0; i < d; ++i) {
        double x = a[i] * s, y = b[i] * s;
        if (x != std::round(x) || y != std::round(y)) throw ValidationError("box corners must be multiples of the grid step");
        box.lo[i] = static_cast<std::int64_t>(x);
        box.hi[i] = static_cast<std::int64_t>(y);
        if (box.hi[i] < box.lo[i]) throw ValidationError("empty box");
    }
    return box;
}

/// a charge spec (JSON object with "type") or a sampled form file
ChargePtr load_charge(const std::string& path, std::optional<int> level = std::nullopt) {
    if (fs::path(path).extension() != ".csv") {
        Json j = read_json_file(path);
        if (j.is_object() && j.contains("type")) return charge_from_json(j, fs::path(path).parent_path());
        return form_charge(form_from_json(j));
    }
    return form_charge(read_form_file(path, level));
}

struct Output {
    Json result = Json::object();
    std::string csv;  // report body when --format csv
    std::vector<std::pair<std::string, std::string>> files;
};

Json options_config(const CLI::App* sub) {
    Json args = Json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        std::string name = opt->get_single_name();
        if (name.empty() || name == "help") continue;
        if (opt->get_items_expected_max() == 0) {
            args[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            auto r = opt->results();
            std::string v;
            for (std::size_t k = 0; k < r.size(); ++k) v += (k ? "," : "") + r[k];
            args[name] = v;
        } else if (!opt->get_default_str().empty()) {
            args[name] = opt->get_default_str();
        }
    }
    return args;
}

void stamp(Json& j, const std::string& hash) { j["config_hash"] = hash; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractional charges on dyadic cubical grids"};
    app.require_subcommand(1);
    int threads = 0;
    std::string format = "json";
    app.add_option("--threads", threads, "cap on worker threads (0: hardware)");
    app.add_option("--format", format, "stdout format for reports")->check(CLI::IsMember({"json", "csv"}));

    // flatnorm
    auto* fn = app.add_subcommand("flatnorm", "flat norm of a chain with a certificate");
    std::string fn_chain, fn_mode = "exact", fn_cert, fn_solver = "auto";
    std::int64_t fn_margin = 0;
    fn->add_option("--chain", fn_chain)->required();
    fn->add_option("--mode", fn_mode, "exact|float")->capture_default_str()->check(CLI::IsMember({"exact", "float"}));
    fn->add_option("--cert", fn_cert, "certificate output");
    fn->add_option("--margin", fn_margin, "support box growth in cells")->capture_default_str();
    fn->add_option("--solver", fn_solver, "float solver: auto|simplex|ipm")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "simplex", "ipm"}));

    // mollify
    auto* mo = app.add_subcommand("mollify", "chain mollification T * Phi_eps");
    std::string mo_chain, mo_out, mo_mode = "exact", mo_kernel = "poly3";
    double mo_eps = 0.125;
    mo->add_option("--chain", mo_chain)->required();
    mo->add_option("--eps", mo_eps)->capture_default_str();
    mo->add_option("--out", mo_out);
    mo->add_option("--mode", mo_mode, "exact|float")->capture_default_str()->check(CLI::IsMember({"exact", "float"}));
    mo->add_option("--kernel", mo_kernel, "poly3|exp")->capture_default_str();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a charge on a chain");
    std::string ev_charge, ev_chain;
    ev->add_option("--charge", ev_charge, "charge spec or form file")->required();
    ev->add_option("--chain", ev_chain)->required();

    // ladder
    auto* ld = app.add_subcommand("ladder", "dyadic smoothing ladder of a charge");
    std::string ld_charge, ld_dir, ld_lo, ld_hi, ld_kernel = "poly3";
    int ld_levels = 4;
    ld->add_option("--charge", ld_charge)->required();
    ld->add_option("--levels", ld_levels, "deepest level N")->capture_default_str();
    ld->add_option("--out-dir", ld_dir, "one form file per level")->required();
    ld->add_option("--lo", ld_lo, "evaluation box lower corner (ambient)");
    ld->add_option("--hi", ld_hi, "evaluation box upper corner (ambient)");
    ld->add_option("--kernel", ld_kernel)->capture_default_str();

    // wedge
    auto* we = app.add_subcommand("wedge", "paraproduct wedge evaluated on a chain");
    std::string we_omega, we_eta, we_chain, we_report, we_kernel = "poly3";
    double we_alpha = 1, we_beta = 1, we_tol = 1e-4;
    bool we_d_omega = false, we_d_eta = false, we_raw = false;
    we->add_option("--omega", we_omega)->required();
    we->add_option("--eta", we_eta)->required();
    we->add_flag("--d-omega", we_d_omega, "use d(omega)");
    we->add_flag("--d-eta", we_d_eta, "use d(eta)");
    we->add_option("--chain", we_chain)->required();
    we->add_option("--alpha", we_alpha)->required();
    we->add_option("--beta", we_beta)->required();
    we->add_option("--tol", we_tol)->capture_default_str();
    we->add_option("--report", we_report, "convergence report CSV");
    we->add_option("--kernel", we_kernel)->capture_default_str();
    we->add_flag("--raw", we_raw, "plain partial sums, no tail extrapolation");

    // young
    auto* yo = app.add_subcommand("young", "Young integral of f dg over [0,1]");
    std::string yo_f, yo_g, yo_report, yo_kernel = "poly3";
    double yo_alpha = 1, yo_beta = 1, yo_tol = 1e-4;
    int yo_level = -1;
    bool yo_raw = false;
    yo->add_option("--f", yo_f)->required();
    yo->add_option("--g", yo_g)->required();
    yo->add_option("--alpha", yo_alpha)->required();
    yo->add_option("--beta", yo_beta)->required();
    yo->add_option("--tol", yo_tol)->capture_default_str();
    yo->add_option("--level", yo_level, "grid level for CSV input without header");
    yo->add_option("--report", yo_report);
    yo->add_option("--kernel", yo_kernel)->capture_default_str();
    yo->add_flag("--raw", yo_raw);

    // zust
    auto* zu = app.add_subcommand("zust", "integral of f dg_1 ^ ... ^ dg_d over [0,1]^d");
    std::string zu_f, zu_g, zu_alphas, zu_report, zu_kernel = "poly3";
    double zu_tol = 1e-3;
    bool zu_raw = false;
    zu->add_option("--f", zu_f)->required();
    zu->add_option("--g", zu_g, "comma-separated form files")->required();
    zu->add_option("--alphas", zu_alphas, "alpha_0,...,alpha_d")->required();
    zu->add_option("--tol", zu_tol)->capture_default_str();
    zu->add_option("--report", zu_report);
    zu->add_option("--kernel", zu_kernel)->capture_default_str();
    zu->add_flag("--raw", zu_raw);

    // gen
    auto* ge = app.add_subcommand("gen", "Weierstrass test data");
    std::string ge_spec, ge_out, ge_lo = "0", ge_hi = "1", ge_dir;
    int ge_d = 1, ge_L = 10, ge_b = 2, ge_terms = 0;
    double ge_alpha = 0.5, ge_phase0 = 0, ge_step = 0, ge_hurst = 0.5;
    bool ge_mid = false;
    std::uint64_t ge_seed = 1;
    ge->add_option("--spec", ge_spec, "WeierstrassSpec JSON (overrides the flags below)");
    ge->add_option("--d", ge_d)->capture_default_str();
    ge->add_option("--L", ge_L)->capture_default_str();
    ge->add_option("--lo", ge_lo, "box lower corner (ambient; one value is broadcast)")->capture_default_str();
    ge->add_option("--hi", ge_hi)->capture_default_str();
    ge->add_option("--alpha", ge_alpha)->capture_default_str();
    ge->add_option("--b", ge_b)->capture_default_str();
    ge->add_option("--terms", ge_terms)->capture_default_str();
    ge->add_option("--phase0", ge_phase0)->capture_default_str();
    ge->add_option("--phase-step", ge_step)->capture_default_str();
    ge->add_option("--direction", ge_dir, "integer direction, e.g. 1,1");
    ge->add_option("--out", ge_out, ".csv (1-D) or .json")->required();
    ge->add_flag("--midpoint", ge_mid, "non-normative seeded midpoint displacement on [0,1]");
    ge->add_option("--hurst", ge_hurst)->capture_default_str();
    ge->add_option("--seed", ge_seed)->capture_default_str();

    // estimate
    auto* es = app.add_subcommand("estimate", "Hölder exponent or fractional-norm lower bound");
    std::string es_form, es_charge, es_lo, es_hi, es_theta;
    double es_alpha = -1;
    int es_level = -1;
    es->add_option("--form", es_form, "0-form: Hölder exponent estimate");
    es->add_option("--charge", es_charge, "charge: fractional norm lower bound");
    es->add_option("--alpha", es_alpha, "exponent for the norm bound");
    es->add_option("--lo", es_lo);
    es->add_option("--hi", es_hi);
    es->add_option("--theta", es_theta, "eps list for the continuity profile");
    es->add_option("--level", es_level, "grid level for CSV input without header");

    // run
    auto* rn = app.add_subcommand("run", "replay an emitted config");
    std::string rn_config;
    rn->add_option("--config", rn_config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        Json err{{"status", "error"}, {"error_class", "validation"}, {"message", e.what()}};
        std::cout << err.dump(2) << std::endl;
        return 2;
    }

    if (rn->parsed()) {
        // rebuild argv from the config and re-enter
        try {
            Json cfg = read_json_file(rn_config);
            if (cfg.contains("config")) cfg = cfg["config"];
            std::vector<std::string> args{argv[0]};
            if (cfg.contains("threads")) args.push_back("--threads=" + cfg["threads"].get<std::string>());
            if (cfg.contains("format")) args.push_back("--format=" + cfg["format"].get<std::string>());
            args.push_back(cfg.at("subcommand").get<std::string>());
            if (args.back() == "run") throw ValidationError("a replayed config cannot itself be a replay");
            for (auto& [k, v] : cfg.at("args").items()) {
                if (v.is_boolean()) {
                    if (v.get<bool>()) args.push_back("--" + k);
                } else {
                    args.push_back("--" + k + "=" + v.get<std::string>());
                }
            }
            std::vector<char*> av;
            for (auto& s : args) av.push_back(s.data());
            return main(static_cast<int>(av.size()), av.data());
        } catch (const Error& e) {
            std::cout << Json{{"status", "error"}, {"error_class", e.error_class()}, {"message", e.what()}}.dump(2)
                      << std::endl;
            return e.exit_code();
        } catch (const std::exception& e) {
            std::cout << Json{{"status", "error"}, {"error_class", "validation"}, {"message", e.what()}}.dump(2)
                      << std::endl;
            return 2;
        }
    }

    CLI::App* sub = app.get_subcommands().front();
    Json config;
    config["subcommand"] = sub->get_name();
    config["threads"] = std::to_string(threads);
    config["format"] = format;
    config["args"] = options_config(sub);
    std::string hash = config_hash(config);
    if (threads > 0) set_thread_limit(threads);

    Output out;
    try {
        if (sub == fn) {
            ChainD T = chain_from_json<double>(read_json_file(fn_chain));
            FlatNormOptions opt;
            opt.margin = fn_margin;
            opt.solver = fn_solver == "simplex" ? FloatSolver::Simplex
                         : fn_solver == "ipm"   ? FloatSolver::InteriorPoint
                                                : FloatSolver::Auto;
            Json cert;
            if (fn_mode == "exact") {
                auto c = flat_norm_exact(chain_from_json<Rational>(read_json_file(fn_chain)), opt);
                cert = cert_to_json(c);
            } else {
                cert = cert_to_json(flat_norm_float(T, opt));
            }
            out.result = Json{{"value", cert["value"]},
                              {"value_float", cert["value_float"]},
                              {"lower_bound", cert["lower_bound"]},
                              {"solver", cert["solver"]},
                              {"mass", mass(T)},
                              {"normal_mass", T.m > 0 ? normal_mass(T) : mass(T)}};
            stamp(cert, hash);
            if (!fn_cert.empty()) out.files.emplace_back(fn_cert, cert.dump(2));
        } else if (sub == mo) {
            Mollifier K;
            Json chain;
            ChainD T = chain_from_json<double>(read_json_file(mo_chain));
            K = Mollifier(T.d, T.L, mo_eps, parse_profile(mo_kernel));
            if (mo_mode == "exact") {
                auto q = mollify_chain(chain_from_json<Rational>(read_json_file(mo_chain)), K);
                chain = chain_to_json(q);
                out.result["mass"] = rational_to_json(mass(q));
            } else {
                auto r = mollify_chain(T, K);
                chain = chain_to_json(r);
                out.result["mass"] = mass(r);
            }
            out.result["eps"] = K.epsilon();
            out.result["radius_cells"] = K.R;
            out.result["cells"] = chain["cells"].size();
            stamp(chain, hash);
            if (!mo_out.empty()) out.files.emplace_back(mo_out, chain.dump(2));
        } else if (sub == ev) {
            ChargePtr w = load_charge(ev_charge);
            ChainD T = chain_from_json<double>(read_json_file(ev_chain));
            if (auto* wc = dynamic_cast<const WedgeCharge*>(w.get())) {
                w->check_chain(T);
                auto r = wc->state().evaluate(T);
                out.result["value"] = r.value;
                out.result["report"] = report_to_json(r.report);
            } else {
                out.result["value"] = w->evaluate(T);
            }
            out.result["kind"] = w->kind();
        } else if (sub == ld) {
            ChargePtr w = load_charge(ld_charge);
            NodeBox box;
            if (!ld_lo.empty() || !ld_hi.empty()) {
                box = box_from_coords(w->dim(), w->level(), ld_lo, ld_hi);
            } else {
                box = w->domain().grown(-((std::int64_t(1) << w->level()) + 2));
                for (int i = 0; i < box.d; ++i)
                    if (box.hi[i] < box.lo[i]) throw ResolutionError("charge domain leaves no room for the level-0 kernel");
            }
            auto lad = dyadic_ladder(w, ld_levels, box, parse_profile(ld_kernel));
            Json files = Json::array();
            for (std::size_t n = 0; n < lad.size(); ++n) {
                char name[32];
                std::snprintf(name, sizeof name, "level_%03zu.json", n);
                Json f = form_to_json(lad[n]);
                f["ladder_index"] = n;
                stamp(f, hash);
                out.files.emplace_back((fs::path(ld_dir) / name).string(), f.dump());
                files.push_back(name);
            }
            out.result["files"] = files;
            out.result["box"] = box_to_json(box);
            if (!fs::exists(ld_dir)) fs::create_directories(ld_dir);
        } else if (sub == we || sub == yo || sub == zu) {
            WedgeResult r;
            if (sub == we) {
                ChargePtr w = load_charge(we_omega), e = load_charge(we_eta);
                if (we_d_omega) w = exterior_derivative(w);
                if (we_d_eta) e = exterior_derivative(e);
                ParaproductOptions o;
                o.tol = we_tol;
                o.accelerate = !we_raw;
                o.profile = parse_profile(we_kernel);
                auto ps = make_paraproduct(w, we_alpha, e, we_beta, o);
                ChainD T = chain_from_json<double>(read_json_file(we_chain));
                r = ps->evaluate(T);
            } else if (sub == yo) {
                std::optional<int> lv;
                if (yo_level >= 0) lv = yo_level;
                ParaproductOptions o;
                o.tol = yo_tol;
                o.accelerate = !yo_raw;
                o.profile = parse_profile(yo_kernel);
                r = young_integral(read_form_file(yo_f, lv), read_form_file(yo_g, lv), yo_alpha, yo_beta, o);
            } else {
                ParaproductOptions o;
                o.tol = zu_tol;
                o.accelerate = !zu_raw;
                o.profile = parse_profile(zu_kernel);
                std::vector<SampledForm> gs;
                for (auto& p : split_paths(zu_g)) gs.push_back(read_form_file(p));
                r = zust_integral(read_form_file(zu_f), gs, parse_list(zu_alphas), o);
            }
            out.result["value"] = r.value;
            out.result["report"] = report_to_json(r.report);
            std::string rep = report_to_csv(r.report, "# config_hash=" + hash + "\n");
            out.csv = report_to_csv(r.report);
            const std::string& rp = sub == we ? we_report : sub == yo ? yo_report : zu_report;
            if (!rp.empty()) out.files.emplace_back(rp, rep);
        } else if (sub == ge) {
            SampledForm f;
            if (ge_mid) {
                f = midpoint_displacement(ge_L, ge_hurst, ge_seed);
                out.result["generator"] = "midpoint_displacement";
            } else {
                WeierstrassSpec s;
                if (!ge_spec.empty()) {
                    s = weierstrass_from_json(read_json_file(ge_spec));
                } else {
                    s.b = ge_b;
                    s.a = std::pow(static_cast<double>(ge_b), -ge_alpha);
                    s.terms = ge_terms;
                    s.phase0 = ge_phase0;
                    s.phase_step = ge_step;
                    if (!ge_dir.empty()) {
                        auto v = parse_list(ge_dir);
                        if (static_cast<int>(v.size()) != ge_d) throw ValidationError("direction needs d entries");
                        s.direction = {0, 0, 0, 0};
                        for (int i = 0; i < ge_d; ++i) s.direction[i] = static_cast<int>(v[i]);
                    }
                }
                if (ge_d < 1 || ge_d > kMaxDim) throw DimensionError("dimension out of range");
                auto lo = parse_list(ge_lo), hi = parse_list(ge_hi);
                auto widen = [&](std::vector<double> v) {
                    if (v.size() == 1) v.assign(ge_d, v[0]);
                    std::string s2;
                    for (std::size_t k = 0; k < v.size(); ++k) s2 += (k ? "," : "") + std::to_string(v[k]);
                    return s2;
                };
                NodeBox box = box_from_coords(ge_d, ge_L, widen(lo), widen(hi));
                f = weierstrass_sample(s, ge_d, ge_L, box);
                out.result["spec"] = weierstrass_to_json(s, ge_d);
            }
            out.result["nodes"] = f.box.size();
            out.result["alpha"] = f.holder->alpha;
            out.result["lip"] = f.holder->lip;
            if (fs::path(ge_out).extension() == ".csv") {
                out.files.emplace_back(ge_out, "# config_hash=" + hash + "\n" + form_to_csv(f));
            } else {
                Json j = form_to_json(f);
                stamp(j, hash);
                out.files.emplace_back(ge_out, j.dump());
            }
        } else if (sub == es) {
            std::optional<int> lv;
            if (es_level >= 0) lv = es_level;
            if (!es_form.empty()) {
                auto f = read_form_file(es_form, lv);
                auto h = holder_exponent_estimate(f);
                out.result["alpha_hat"] = h.alpha;
                out.result["lip_hat"] = h.lip;
            }
            if (!es_charge.empty()) {
                ChargePtr w = load_charge(es_charge, lv);
                NodeBox box = (!es_lo.empty() || !es_hi.empty()) ? box_from_coords(w->dim(), w->level(), es_lo, es_hi)
                                                                  : w->domain();
                DyadicCubeFamily fam(w->dim(), w->level(), w->degree(), box);
                auto v = evaluate_family(*w, fam);
                if (es_alpha >= 0) {
                    if (!(es_alpha > 0 && es_alpha <= 1)) throw ValidationError("exponent must lie in (0, 1]");
                    out.result["fractional_norm_lb"] = ratio_bound(v, es_alpha);
                    out.result["alpha"] = es_alpha;
                }
                out.result["charge_norm_lb"] = ratio_bound(v, 0.0);
                out.result["flat_norm_lb"] = ratio_bound(v, 1.0);
                out.result["family_size"] = fam.size();
                if (!es_theta.empty()) {
                    auto eps = parse_list(es_theta);
                    Json th = Json::array();
                    for (double e : eps) {
                        double t = 0;
                        for (std::size_t k = 0; k < v.wt.size(); ++k)
                            if (v.F[k] > 0) t = std::max(t, (v.wt[k] - e * v.N[k]) / v.F[k]);
                        th.push_back(Json{{"eps", e}, {"theta", t}});
                    }
                    out.result["theta"] = th;
                }
            }
            if (es_form.empty() && es_charge.empty()) throw ValidationError("estimate needs --form or --charge");
        }
        for (auto& [path, text] : out.files) write_text_file(path, text);
    } catch (const ResolutionExhausted& e) {
        Json err{{"status", "error"},           {"error_class", e.error_class()}, {"message", e.what()},
                 {"config", config},            {"config_hash", hash},           {"report", report_to_json(e.report)}};
        std::cout << err.dump(2) << std::endl;
        return e.exit_code();
    } catch (const Error& e) {
        Json err{{"status", "error"}, {"error_class", e.error_class()}, {"message", e.what()}, {"config", config},
                 {"config_hash", hash}};
        std::cout << err.dump(2) << std::endl;
        return e.exit_code();
    } catch (const std::exception& e) {
        Json err{{"status", "error"}, {"error_class", "error"}, {"message", e.what()}, {"config", config},
                 {"config_hash", hash}};
        std::cout << err.dump(2) << std::endl;
        return 1;
    }

    if (format == "csv") {
        std::cout << "# config_hash=" << hash << "\n";
        if (!out.csv.empty()) {
            std::cout << out.csv;
        } else {
            std::cout << "key,value\n";
            for (auto& [k, v] : out.result.items())
                if (v.is_primitive()) std::cout << k << "," << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
        }
        return 0;
    }
    Json doc{{"status", "ok"}, {"config", config}, {"config_hash", hash}, {"result", out.result}};
    std::cout << doc.dump(2) << std::endl;
    return 0;
}
