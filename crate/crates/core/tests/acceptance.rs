//! Acceptance run: one `PASS`/`FAIL` line per criterion, in order, each timed
//! on its own. All value comparisons are exact rational equality.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gw_core::derived::{
    abelian_engine, abelian_sixsecants, curve_secant_engine, format_rational, make_table,
    multiple_cover_number, secant_numbers, TableEngines, TableId,
};
use gw_core::engine::cache;
use gw_core::ring::{rat, ratio};
use gw_core::verify::{
    bundled_fixture, diff_tables, divisor_suite, permutation_suite, ptexc_suite, residual_suite,
    vanishing_suite, SuiteReport,
};
use gw_core::{CurveClass, Engine, Rational};
use rayon::prelude::*;

struct Criterion {
    number: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> Vec<String>,
}

fn expect(failures: &mut Vec<String>, what: String, got: Rational, want: Rational) {
    if got != want {
        failures.push(format!("{what}: expected {want}, got {got}"));
    }
}

fn int(n: i64) -> Rational {
    rat(n)
}

fn pt_power(e: &Engine, beta: &[i64], n: i64) -> Rational {
    let pt = e.target().pt_index();
    e.gw_basis(&CurveClass::new(beta.iter().copied()), &vec![pt; n as usize])
        .unwrap()
}

fn table_matches_fixture(id: TableId, engines: &TableEngines, dmax: i64, failures: &mut Vec<String>) -> gw_core::derived::Table {
    let t = make_table(id, engines, dmax).unwrap();
    let fixture = bundled_fixture(id);
    if (id.dmin()..=dmax).any(|d| !fixture.degrees.contains(&d)) {
        failures.push(format!("{}: fixture lacks columns up to d = {dmax}", id.name()));
    }
    failures.extend(diff_tables(&fixture, &t));
    t
}

fn blowup_engine(e: &TableEngines) -> &Engine {
    match e {
        TableEngines::Blowup(e) => e,
        TableEngines::Tangency(_) => unreachable!("blow-up table"),
    }
}

const PLANE_COUNTS: [i64; 7] = [1, 1, 12, 620, 87304, 26312976, 14616808192];

fn plane_curves() -> Vec<String> {
    let e = Engine::blowup(2, 0);
    let mut f = Vec::new();
    for (d, &n) in (1..=7).zip(&PLANE_COUNTS) {
        expect(&mut f, format!("P^2 d={d}"), pt_power(&e, &[d], 3 * d - 1), int(n));
    }
    f
}

fn plane_table() -> Vec<String> {
    let engines = TableEngines::new(TableId::P2One);
    let mut f = Vec::new();
    let t = table_matches_fixture(TableId::P2One, &engines, 7, &mut f);
    let row2 = [0, 0, 1, 96, 18132, 6506400, 4059366000];
    for (d, &n) in (1..=7).zip(&row2) {
        expect(&mut f, format!("e=-2 d={d}"), t.cell(&[-2], d).unwrap().clone().unwrap(), int(n));
    }
    for d in 3..=7 {
        expect(&mut f, format!("diagonal e={} d={d}", 1 - d), t.cell(&[1 - d], d).unwrap().clone().unwrap(), int(1));
    }
    f
}

fn threefold_one_point() -> Vec<String> {
    let engines = TableEngines::new(TableId::P3One);
    let mut f = Vec::new();
    let t = table_matches_fixture(TableId::P3One, &engines, 8, &mut f);
    expect(&mut f, "e=-2 d=8".into(), t.cell(&[-2], 8).unwrap().clone().unwrap(), int(1666128));
    for d in 2..=8 {
        expect(&mut f, format!("e=-4 d={d}"), t.cell(&[-4], d).unwrap().clone().unwrap(), int(0));
    }
    f
}

fn threefold_two_points() -> Vec<String> {
    let engines = TableEngines::new(TableId::P3Two);
    let e = blowup_engine(&engines);
    let mut f = Vec::new();
    let spots: [(&[i64], i64, Rational); 7] = [
        (&[5, -2, -2], 6, int(1)),
        (&[6, -2, -2], 8, int(48)),
        (&[7, -2, -2], 10, int(4374)),
        (&[7, -3, -2], 9, int(96)),
        (&[2, -2, -2], 0, ratio(1, 8)),
        (&[3, -3, -3], 0, ratio(1, 27)),
        (&[4, -4, -4], 0, ratio(1, 64)),
    ];
    let got: Vec<Rational> = spots.par_iter().map(|(b, n, _)| pt_power(e, b, *n)).collect();
    for ((b, _, want), got) in spots.iter().zip(got) {
        expect(&mut f, format!("beta={b:?}"), got, want.clone());
    }
    table_matches_fixture(TableId::P3Two, &engines, 7, &mut f);
    f
}

fn fourfold_two_points() -> Vec<String> {
    let engines = TableEngines::new(TableId::P4Two);
    let mut f = Vec::new();
    let t = table_matches_fixture(TableId::P4Two, &engines, 7, &mut f);
    let spots: [(&[i64], i64, Rational); 6] = [
        (&[-1, -1], 4, int(1)),
        (&[-2, -2], 3, ratio(1, 4)),
        (&[-2, -2], 5, ratio(5, 4)),
        (&[-3, -3], 4, ratio(1, 27)),
        (&[-3, -3], 6, ratio(-1, 12)),
        (&[-3, -3], 7, ratio(-1, 54)),
    ];
    for (row, d, want) in spots {
        expect(&mut f, format!("{row:?} d={d}"), t.cell(row, d).unwrap().clone().unwrap(), want);
    }
    f
}

fn multiple_covers() -> Vec<String> {
    let e = Engine::blowup(3, 2);
    let mut f = Vec::new();
    for d in 1..=6 {
        expect(&mut f, format!("d={d}"), multiple_cover_number(&e, d).unwrap(), ratio(1, d * d * d));
    }
    f
}

fn tangency() -> Vec<String> {
    let engines = TableEngines::new(TableId::Tangency);
    let mut f = Vec::new();
    let t = table_matches_fixture(TableId::Tangency, &engines, 5, &mut f);
    let rows: [(&[i64], [i64; 4]); 3] = [
        (&[2, 1], [1, 10, 428, 51040]),
        (&[3, 1], [1, 3, 28, 485]),
        (&[3, 2], [0, 1, 4, 81]),
    ];
    for (row, vals) in rows {
        for (d, n) in (2..=5).zip(vals) {
            expect(&mut f, format!("{row:?} d={d}"), t.cell(row, d).unwrap().clone().unwrap(), int(n));
        }
    }
    f
}

fn curve_secants() -> Vec<String> {
    let mut f = Vec::new();
    for d in 3..=8i64 {
        for g in 0..=3i64 {
            let e = curve_secant_engine(d, g);
            let s = secant_numbers(&e).unwrap();
            let t = ratio((d - 1) * (d - 2) * (d - 3), 3) - int(g * (d - 2));
            let q = ratio((d - 2) * (d - 3) * (d - 3) * (d - 4), 12) - ratio(g * (d * d - 7 * d + 13 - g), 2);
            expect(&mut f, format!("t(d={d},g={g})"), s.t, t);
            expect(&mut f, format!("q(d={d},g={g})"), s.q, q);
            let tg = e.target();
            let [h2, ff, pt] = ["H2", "F", "pt"].map(|n| tg.index_of(n).unwrap());
            let gw = |b: i64, cls: &[usize]| e.gw_basis(&CurveClass::new([1, b]), cls).unwrap();
            let list: [(i64, &[usize], Rational); 10] = [
                (-1, &[h2, h2, h2], int(2 * d)),
                (-1, &[h2, pt], int(d)),
                (-1, &[ff, ff, h2], int(0)),
                (-1, &[ff, h2, h2], int(1)),
                (-1, &[ff, pt], int(1)),
                (-2, &[h2, h2], int(d * (d - 2) + 1 - g)),
                (-2, &[pt], ratio(d * (d - 3), 2) + int(1 - g)),
                (-2, &[ff, h2], int(d - 1)),
                (-2, &[ff, ff], int(1)),
                (-3, &[ff], ratio((d - 1) * (d - 4), 2) + int(1 - g)),
            ];
            for (b, cls, want) in list {
                let names: Vec<&str> = cls.iter().map(|&c| tg.class_name(c)).collect();
                expect(&mut f, format!("H'{b}E' {names:?} (d={d},g={g})"), gw(b, cls), want);
            }
        }
    }
    f
}

fn abelian() -> Vec<String> {
    let mut f = Vec::new();
    expect(&mut f, "H'-6E'".into(), abelian_sixsecants(&abelian_engine()).unwrap(), int(25));
    f
}

fn suite_failures(reports: Vec<SuiteReport>, minimum: usize, what: &str) -> Vec<String> {
    let checked: usize = reports.iter().map(|r| r.checked).sum();
    let mut f: Vec<String> = reports.into_iter().flat_map(|r| r.failures).collect();
    if checked < minimum {
        f.push(format!("{what}: only {checked} samples, need {minimum}"));
    }
    f
}

fn property_suites() -> Vec<String> {
    let targets = [(2, 2, 4), (3, 1, 4), (3, 2, 3)];
    let engines: Vec<(Engine, i64)> = targets.iter().map(|&(r, s, d)| (Engine::blowup(r, s), d)).collect();
    let mut f = Vec::new();
    let run = |suite: fn(&Engine, usize, u64, i64) -> SuiteReport, n: usize, seed: u64| {
        engines.iter().map(|(e, d)| suite(e, n, seed, *d)).collect::<Vec<_>>()
    };
    f.extend(suite_failures(run(residual_suite, 100, 11), 200, "residual"));
    f.extend(suite_failures(run(ptexc_suite, 20, 12), 50, "ptexc"));
    f.extend(suite_failures(run(vanishing_suite, 40, 13), 100, "vanishing"));
    f.extend(suite_failures(vec![permutation_suite(&engines[2].0, 60, 14, 3)], 50, "permutation"));
    f.extend(suite_failures(run(divisor_suite, 40, 15), 100, "divisor"));
    f
}

/// Every engine that criteria 1-9 evaluate, in a fixed order.
struct Workload {
    plane: Engine,
    tables: Vec<(TableId, i64, TableEngines)>,
    covers: Engine,
    secants: Vec<(i64, i64, Engine)>,
    abelian: Engine,
}

impl Workload {
    fn new() -> Self {
        Workload {
            plane: Engine::blowup(2, 0),
            tables: [(TableId::P2One, 7), (TableId::P3One, 8), (TableId::P3Two, 7), (TableId::P4Two, 7), (TableId::Tangency, 5)]
                .into_iter()
                .map(|(id, dmax)| (id, dmax, TableEngines::new(id)))
                .collect(),
            covers: Engine::blowup(3, 2),
            secants: (3..=8)
                .flat_map(|d| (0..=3).map(move |g| (d, g, curve_secant_engine(d, g))))
                .collect(),
            abelian: abelian_engine(),
        }
    }

    fn engines(&self) -> Vec<&Engine> {
        let mut out = vec![&self.plane];
        for (_, _, t) in &self.tables {
            match t {
                TableEngines::Blowup(e) => out.push(e),
                TableEngines::Tangency(list) => {
                    out.extend(list);
                }
            }
        }
        out.push(&self.covers);
        out.extend(self.secants.iter().map(|(_, _, e)| e));
        out.push(&self.abelian);
        out
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for d in 1..=7 {
            writeln!(out, "P2 d={d} {}", format_rational(&pt_power(&self.plane, &[d], 3 * d - 1))).unwrap();
        }
        for (id, dmax, e) in &self.tables {
            out.push_str(&make_table(*id, e, *dmax).unwrap().to_tsv());
        }
        let covers: Vec<Rational> = (1..=6i64)
            .into_par_iter()
            .map(|d| multiple_cover_number(&self.covers, d).unwrap())
            .collect();
        for (d, v) in (1..=6).zip(covers) {
            writeln!(out, "cover d={d} {}", format_rational(&v)).unwrap();
        }
        let secants: Vec<String> = self
            .secants
            .par_iter()
            .map(|(d, g, e)| {
                let s = secant_numbers(e).unwrap();
                format!("secant d={d} g={g} t={} q={}", format_rational(&s.t), format_rational(&s.q))
            })
            .collect();
        for line in secants {
            writeln!(out, "{line}").unwrap();
        }
        writeln!(out, "abelian {}", format_rational(&abelian_sixsecants(&self.abelian).unwrap())).unwrap();
        out
    }

    fn save(&self, dir: &Path) {
        for (i, e) in self.engines().into_iter().enumerate() {
            cache::save(e, &dir.join(format!("{i}.gw"))).unwrap();
        }
    }

    fn load(&self, dir: &Path) {
        for (i, e) in self.engines().into_iter().enumerate() {
            cache::load(e, &dir.join(format!("{i}.gw"))).unwrap();
        }
    }

    fn computed(&self) -> u64 {
        self.engines()
            .into_iter()
            .map(|e| e.computed() + e.base().map_or(0, |b| b.computed()))
            .sum()
    }
}

fn with_workers<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

fn determinism() -> Vec<String> {
    let mut f = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let cold = Workload::new();
    let reference = with_workers(4, || cold.render());
    cold.save(dir.path());
    for workers in [1, 4] {
        let warm = Workload::new();
        warm.load(dir.path());
        let out = with_workers(workers, || warm.render());
        if out != reference {
            f.push(format!("warm run with {workers} worker(s) differs from the cold run"));
        }
        if warm.computed() != 0 {
            f.push(format!("warm run with {workers} worker(s) recomputed {} keys", warm.computed()));
        }
    }
    let single = with_workers(1, || Workload::new().render());
    if single != reference {
        f.push("cold run with 1 worker differs from the cold run with 4".into());
    }
    f
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { number: 1, title: "P^2 rational curve counts through d = 7", budget: Duration::from_secs(30), run: plane_curves },
        Criterion { number: 2, title: "p2-1 table, rows e = 0..-6, d <= 7", budget: Duration::from_secs(60), run: plane_table },
        Criterion { number: 3, title: "p3-1 table, d <= 8", budget: Duration::from_secs(180), run: threefold_one_point },
        Criterion { number: 4, title: "p3-2 spot checks and table through d = 7", budget: Duration::from_secs(300), run: threefold_two_points },
        Criterion { number: 5, title: "p4-1 spot checks and table through d = 7", budget: Duration::from_secs(300), run: fourfold_two_points },
        Criterion { number: 6, title: "multiple covers are 1/d^3 for d = 1..6", budget: Duration::from_secs(60), run: multiple_covers },
        Criterion { number: 7, title: "tangency table, d = 2..5", budget: Duration::from_secs(120), run: tangency },
        Criterion { number: 8, title: "curve-secant numbers for d = 3..8, g = 0..3", budget: Duration::from_secs(30), run: curve_secants },
        Criterion { number: 9, title: "abelian surface six-secants = 25", budget: Duration::from_secs(30), run: abelian },
        Criterion { number: 10, title: "residual, ptexc, vanishing, permutation and divisor suites", budget: Duration::from_secs(300), run: property_suites },
        Criterion { number: 11, title: "criteria 1-9 byte-identical cold, warm, 1 and 4 workers", budget: Duration::from_secs(600), run: determinism },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let failures = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let ok = failures.is_empty() && in_time;
        println!(
            "{} criterion {:>2}: {} ({:.2?}, budget {:?})",
            if ok { "PASS" } else { "FAIL" },
            c.number,
            c.title,
            elapsed,
            c.budget
        );
        for line in failures.iter().take(20) {
            println!("         {line}");
        }
        if !in_time {
            println!("         over the time budget");
        }
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
