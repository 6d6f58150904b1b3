// maxvar: grid maximal functions, level sets, variation and the verification
// harness from the command line.
//
// Exit codes: 0 success or all-pass, 1 verification failure, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include <maxvar/maxvar.hpp>

namespace {

using namespace maxvar;

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Options {
    // shared
    unsigned threads = 0;
    bool csv = false;
    std::uint64_t seed = 42;
    std::string report;
    // geometry
    int d = 2;
    Index n = 256;
    std::string h = "auto";
    int margin = 2;
    // data
    std::string in, out, shape;
    std::string op = "uncentered";
    std::string schedule;
    std::string domain = "box";
    std::optional<double> lambda;
    std::string lambdas;
    // cover
    std::string cover_kind = "vitali";
    std::string balls;
    // verify / experiment
    std::string suite = "all";
    double budget = 1.0;
    std::string experiment = "corpus";
    double radius_cells = 4.0;
    std::string golden;
};

GridGeometry geometry_of(const Options& o)
{
    double h = 0.0;
    if (o.h != "auto") {
        try {
            h = std::stod(o.h);
        } catch (const std::exception&) {
            throw InvalidArgument("--h must be a number or 'auto'");
        }
        detail::require(h > 0.0, "--h must be positive");
    }
    return GridGeometry::cube(o.d, o.n, h);
}

Domain domain_of(const Options& o, const GridGeometry& g)
{
    if (o.domain == "box") return Domain::box(g);
    if (o.domain == "free") return Domain::free_space(g);
    throw InvalidArgument("--domain must be box or free");
}

MaximalOperator operator_of(const Options& o, const GridGeometry& g)
{
    if (o.op == "dyadic") return MaximalOperator::dyadic();
    if (o.op == "uncentered")
        return MaximalOperator::uncentered(o.schedule.empty() ? RadiusSchedule::default_for(g)
                                                              : RadiusSchedule::parse(o.schedule, g),
                                           o.threads);
    throw InvalidArgument("--op must be dyadic or uncentered");
}

MaximalOperator::Kind kind_of(const Options& o)
{
    if (o.op == "dyadic") return MaximalOperator::Kind::Dyadic;
    if (o.op == "uncentered") return MaximalOperator::Kind::Uncentered;
    throw InvalidArgument("--op must be dyadic or uncentered");
}

Json config_of(const std::string& command, const Options& o)
{
    return {{"command", command}, {"d", o.d},       {"n", o.n},           {"h", o.h},
            {"margin_cells", o.margin}, {"op", o.op}, {"schedule", o.schedule}, {"domain", o.domain},
            {"lambdas", o.lambdas}, {"seed", o.seed}, {"threads", o.threads}, {"in", o.in},
            {"out", o.out}};
}

/// Writes a JSON document to --report (or stdout) and a CSV twin when asked.
void emit(const Options& o, const Json& doc, const std::string& csv)
{
    if (o.report.empty()) {
        if (o.csv) std::cout << csv;
        else std::cout << doc.dump(1) << "\n";
        return;
    }
    write_json(o.report, doc);
    if (o.csv) {
        auto p = std::filesystem::path(o.report);
        p.replace_extension(".csv");
        write_atomic(p, csv);
    }
}

BallFamily read_balls(const std::string& path, int d)
{
    const Json j = read_json(path);
    detail::require(j.is_array(), "ball file must be a JSON array of [c1, .., cd, r]");
    BallFamily fam;
    for (const auto& b : j) {
        detail::require(b.is_array() && b.size() == static_cast<std::size_t>(d + 1), "each ball needs d + 1 numbers");
        Ball ball;
        for (int a = 0; a < d; ++a) ball.center[a] = b[a].get<double>();
        ball.radius = b[d].get<double>();
        detail::require(ball.radius > 0.0, "ball radius must be positive");
        fam.add(ball);
    }
    return fam;
}

Json balls_json(const BallFamily& fam, int d)
{
    Json out = Json::array();
    for (const auto& b : fam) {
        Json row = Json::array();
        for (int a = 0; a < d; ++a) row.push_back(b.center[a]);
        row.push_back(b.radius);
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options& o)
{
    detail::require(!o.out.empty(), "--out is required");
    const auto spec = ShapeSpec::parse(o.shape, o.margin);
    const auto e = generate_shape(spec, geometry_of(o));
    save(o.out, e);
    std::cout << Json{{"shape", spec.to_string()}, {"cells", e.count()}, {"measure", measure(e)}}.dump() << "\n";
    return 0;
}

int cmd_maximal(const Options& o)
{
    detail::require(!o.out.empty(), "--out is required");
    const auto e = load_grid_set(o.in);
    const auto& g = e.geometry();
    const auto m = operator_of(o, g).apply(e, domain_of(o, g));
    save(o.out, m);
    return 0;
}

ScalarField field_from_input(const Options& o, GridSet* set_out = nullptr)
{
    auto data = load(o.in);
    if (auto* f = std::get_if<ScalarField>(&data)) return std::move(*f);
    const auto& e = std::get<GridSet>(data);
    if (set_out) *set_out = e;
    return operator_of(o, e.geometry()).apply(e, domain_of(o, e.geometry()));
}

int cmd_levelset(const Options& o)
{
    GridSet e;
    const ScalarField m = field_from_input(o, &e);
    const auto& g = m.geometry();
    const Domain omega = domain_of(o, g);
    if (!o.lambdas.empty()) {
        detail::require(e.size() > 0, "--lambdas needs a GridSet input");
        const auto rep = levelset_rate_of(e, omega, m, parse_lambda_grid(o.lambdas), o.op, o.seed);
        Json doc = {{"schema", kReportSchema}, {"kind", "levelset_rate"}, {"config", config_of("levelset", o)}};
        doc["result"] = rep.to_json();
        emit(o, doc, rep.to_csv());
        return 0;
    }
    detail::require(o.lambda.has_value(), "give --lambda or --lambdas");
    const GridSet l = level_set(m, *o.lambda);
    if (!o.out.empty()) save(o.out, l);
    std::cout << Json{{"lambda", *o.lambda}, {"cells", l.count()}, {"measure", measure(l)},
                      {"perimeter", perimeter(l, omega)}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_variation(const Options& o)
{
    GridSet e;
    const ScalarField m = field_from_input(o, &e);
    const Domain omega = domain_of(o, m.geometry());
    Json out = {{"variation", variation_coarea(m, omega)}};
    if (e.size() > 0) {
        const auto r = variation_ratio_of(e, omega, m);
        out["perimeter"] = r.perimeter;
        out["ratio"] = r.ratio;
    }
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_cover(const Options& o)
{
    VerificationReport rep;
    rep.kind = "cover";
    rep.seed = o.seed;
    if (o.cover_kind == "vitali") {
        const auto fam = read_balls(o.balls, o.d);
        rep.add(timed_record("vitali", [&](Record& r) {
            const auto sel = vitali_subfamily(fam);
            const auto unc = vitali_uncovered(geometry_of(o), fam, sel);
            r.measured = {{"input", fam.size()}, {"selected", sel.size()}, {"disjoint", pairwise_disjoint(sel)},
                          {"uncovered_cells", unc.count()}, {"balls", balls_json(sel, o.d)}};
            r.pass = pairwise_disjoint(sel) && unc.empty();
        }));
    } else {
        const auto e = load_grid_set(o.in);
        const int d = e.geometry().d;
        const auto fam = read_balls(o.balls, d);
        if (o.cover_kind == "boxing") {
            rep.add(timed_record("boxing", [&](Record& r) {
                const auto c = boxing_cover(e, fam);
                r.measured = {{"balls", balls_json(c.balls, d)}, {"residual_fraction", c.residual_fraction}};
                r.pass = c.residual.empty();
            }));
        } else if (o.cover_kind == "multiscale") {
            detail::require(o.lambda.has_value(), "--lambda is required");
            rep.add(timed_record("multiscale", [&](Record& r) {
                const auto c = multiscale_covers(e, fam, *o.lambda);
                Json scales = Json::array();
                for (const auto& [n, f] : c.covers) scales.push_back({{"scale", n}, {"balls", balls_json(f, d)}});
                r.measured = {{"boundary_points", c.boundary_points}, {"disjoint", c.disjoint()},
                              {"covered", c.covered()},               {"close", c.close()},
                              {"positive", c.positive()},             {"min_constant", c.min_constant},
                              {"unresolved_balls", c.unresolved.size()}, {"covers", scales}};
                r.pass = c.all_pass();
            }));
        } else {
            throw InvalidArgument("--kind must be vitali, boxing or multiscale");
        }
    }
    emit(o, rep.to_json(config_of("cover", o)), rep.to_csv());
    return rep.all_pass() ? 0 : kExitFail;
}

int cmd_verify(const Options& o)
{
    detail::require(o.suite == "all" || o.suite == "lemmas", "--suite must be all or lemmas");
    detail::require(o.budget >= 0.0, "--budget must be nonnegative");
    const auto rep = lemma_suite(o.seed, o.budget);
    Json cfg = config_of("verify", o);
    cfg["suite"] = o.suite;
    cfg["budget"] = o.budget;
    emit(o, rep.to_json(cfg), rep.to_csv());
    return rep.all_pass() ? 0 : kExitFail;
}

int cmd_experiment(const Options& o)
{
    Json cfg = config_of("experiment", o);
    cfg["experiment"] = o.experiment;
    if (o.experiment == "corpus") {
        const auto lambdas = parse_lambda_grid(o.lambdas.empty() ? "log:0.001:0.3:25" : o.lambdas);
        const auto kind = kind_of(o);
        const auto entries = corpus_experiment(default_corpus(o.margin), o.d, o.n, kind, lambdas, o.threads, o.seed);
        const auto s = summarize(entries);
        VerificationReport rep;
        rep.kind = "corpus";
        rep.seed = o.seed;
        std::ostringstream csv;
        csv.precision(17);
        csv << "shape,variation,perimeter,ratio,sup_c_dy,sup_c_un,slope\n";
        for (const auto& e : entries) {
            Record r;
            r.name = e.shape;
            r.pass = std::isfinite(e.variation.ratio) && std::isfinite(e.rate.sup_c_dy);
            r.measured = {{"variation", e.variation.variation}, {"perimeter", e.variation.perimeter},
                          {"ratio", e.variation.ratio}, {"rate", e.rate.to_json()}};
            rep.add(r);
            csv << e.shape << ',' << e.variation.variation << ',' << e.variation.perimeter << ',' << e.variation.ratio
                << ',' << e.rate.sup_c_dy << ',' << e.rate.sup_c_un << ',' << e.rate.fit.slope << '\n';
        }
        Record sum;
        sum.name = "summary";
        sum.measured = {{"max_ratio", s.max_ratio}, {"sup_c_dy", s.sup_c_dy}, {"sup_c_un", s.sup_c_un}};
        sum.pass = s.finite;
        // envelopes apply at the resolution they were recorded at
        const auto path = o.golden.empty() ? envelope_path() : std::filesystem::path(o.golden) / "envelopes.json";
        if (std::filesystem::exists(path)) {
            const auto env = Envelopes::load(path);
            if (env.config.value("n", Index{0}) == o.n && env.config.value("d", 0) == o.d) {
                const auto c = env.check(envelope_key("corpus", kind, "max_variation_ratio"), s.max_ratio);
                sum.measured["envelope_limit"] = c.limit;
                sum.pass = sum.pass && c.found && c.pass;
            }
        }
        rep.add(sum);
        emit(o, rep.to_json(cfg), csv.str());
        return rep.all_pass() ? 0 : kExitFail;
    }
    if (o.experiment == "optimality") {
        OptimalityConfig c;
        c.d = o.d;
        c.n = o.n;
        c.radius_cells = o.radius_cells;
        if (!o.lambdas.empty()) c.lambdas = parse_lambda_grid(o.lambdas);
        c.axial_lambdas = {c.lambdas.front(), std::sqrt(c.lambdas.front() * c.lambdas.back()), c.lambdas.back()};
        c.threads = o.threads;
        c.seed = o.seed;
        const auto r = optimality_experiment(c);
        Json axial = Json::array();
        for (const auto& a : r.axial)
            axial.push_back({{"lambda", a.lambda}, {"field", a.field_radius}, {"oracle", a.oracle_radius}, {"pass", a.pass}});
        Json doc = {{"schema", kReportSchema}, {"kind", "optimality"}, {"config", cfg}, {"pass", r.pass()},
                    {"slope_pass", r.slope_pass}, {"tolerance", r.tolerance}, {"resolution_flag", r.resolution_flag},
                    {"axial", axial}, {"result", r.rate.to_json()}};
        emit(o, doc, r.rate.to_csv());
        return r.pass() ? 0 : kExitFail;
    }
    if (o.experiment == "single-cube") {
        const auto c = single_cube_campaign(o.seed, 50, o.n);
        Json doc = {{"schema", kReportSchema}, {"kind", "single_cube"}, {"config", cfg},
                    {"cases", c.cases},        {"skipped", c.skipped},  {"max_ratio", c.max_ratio}};
        std::ostringstream csv;
        csv.precision(17);
        csv << "cases,skipped,max_ratio\n" << c.cases << ',' << c.skipped << ',' << c.max_ratio << '\n';
        emit(o, doc, csv.str());
        return 0;
    }
    throw InvalidArgument("--kind must be corpus, optimality or single-cube");
}

int cmd_envelope_regen(const Options& o)
{
    const auto dir = o.golden.empty() ? golden_dir() : std::filesystem::path(o.golden);
    const auto env = compute_envelopes(o.n, o.threads, o.seed);
    env.save(dir / "envelopes.json");
    std::cout << env.to_json().dump(1) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"maxvar: maximal functions and variation on grids"};
    app.require_subcommand(1, 1);
    app.set_help_flag("--help", "Print this help message and exit");
    app.set_help_all_flag("--help-all", "Expand all help");

    auto threads = [&](CLI::App* s) { s->add_option("--threads", o.threads, "Worker threads (0 = all cores)"); };
    auto geometry = [&](CLI::App* s) {
        s->add_option("--d", o.d, "Dimension")->check(CLI::Range(1, 3));
        s->add_option("--n", o.n, "Cells per axis")->check(CLI::PositiveNumber);
        s->add_option("--h", o.h, "Cell side, or auto for 1/n");
    };
    auto op = [&](CLI::App* s) {
        s->add_option("--op", o.op, "dyadic or uncentered");
        s->add_option("--schedule", o.schedule, "geom:RATIO[:RMIN:RMAX] or arith:STEP[:RMIN:RMAX]");
        s->add_option("--domain", o.domain, "box or free");
    };
    auto reporting = [&](CLI::App* s) {
        s->add_option("--report", o.report, "Write the JSON report here instead of stdout");
        s->add_flag("--csv", o.csv, "Also emit CSV");
        s->add_option("--seed", o.seed, "Seed");
    };

    auto* gen = app.add_subcommand("gen", "Rasterize a shape into a GridSet file");
    gen->add_option("--shape", o.shape, "ball:R[:C..] cube:HALF[:C..] annulus:RIN:ROUT[:C..] balls:K[:RMIN:RMAX] "
                                        "dyadic:P[:LEVEL] half:T[:AXIS], optional #SEED")
        ->required();
    gen->add_option("--margin", o.margin, "Empty band in cells");
    gen->add_option("--out", o.out)->required();
    geometry(gen);

    auto* maximal = app.add_subcommand("maximal", "Maximal function of a GridSet");
    maximal->add_option("--in", o.in)->required();
    maximal->add_option("--out", o.out)->required();
    op(maximal);
    threads(maximal);

    auto* levelset = app.add_subcommand("levelset", "Level set of a field, or level-set rates of a set");
    levelset->add_option("--in", o.in, "ScalarField, or GridSet together with --op")->required();
    levelset->add_option("--lambda", o.lambda);
    levelset->add_option("--lambdas", o.lambdas, "log:A:B:N or list:L1,L2,..");
    levelset->add_option("--out", o.out);
    op(levelset);
    threads(levelset);
    reporting(levelset);

    auto* variation = app.add_subcommand("variation", "Total variation of a field, or the variation ratio of a set");
    variation->add_option("--in", o.in)->required();
    op(variation);
    threads(variation);

    auto* cover = app.add_subcommand("cover", "Vitali, boxing or multiscale covers");
    cover->add_option("--kind", o.cover_kind, "vitali, boxing or multiscale");
    cover->add_option("--balls", o.balls, "JSON array of [c1, .., cd, r]")->required();
    cover->add_option("--in", o.in, "GridSet for boxing and multiscale");
    cover->add_option("--lambda", o.lambda);
    geometry(cover);
    reporting(cover);

    auto* verify = app.add_subcommand("verify", "Run the lemma suite");
    verify->add_option("--suite", o.suite, "all or lemmas");
    verify->add_option("--budget", o.budget, "Trial-count scale; 0 runs nothing");
    reporting(verify);

    auto* experiment = app.add_subcommand("experiment", "Corpus, optimality or single-cube experiments");
    experiment->add_option("--kind", o.experiment, "corpus, optimality or single-cube");
    experiment->add_option("--lambdas", o.lambdas);
    experiment->add_option("--radius-cells", o.radius_cells, "Optimality: cells across the ball radius");
    experiment->add_option("--margin", o.margin);
    experiment->add_option("--golden", o.golden, "Envelope directory");
    geometry(experiment);
    op(experiment);
    threads(experiment);
    reporting(experiment);

    auto* regen = app.add_subcommand("envelope-regen", "Recompute the golden envelopes");
    regen->add_option("--n", o.n);
    regen->add_option("--golden", o.golden, "Envelope directory");
    regen->add_option("--seed", o.seed);
    threads(regen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_gen(o);
        if (*maximal) return cmd_maximal(o);
        if (*levelset) return cmd_levelset(o);
        if (*variation) return cmd_variation(o);
        if (*cover) return cmd_cover(o);
        if (*verify) return cmd_verify(o);
        if (*experiment) return cmd_experiment(o);
        if (*regen) return cmd_envelope_regen(o);
    } catch (const std::exception& e) {
        std::cerr << "maxvar: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
