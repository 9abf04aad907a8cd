use queens_bounds::newton::NewtonConfig;
use queens_bounds::problem::Problem;
use queens_bounds::{build_upper, solve};

fn main() {
    for n in [2usize, 3, 4] {
        let problem = build_upper(n).unwrap();
        let solution = solve(&problem, problem.initial_point(), &NewtonConfig::default()).unwrap();
        let tri = problem.layout().num_triangles();
        let slacks = &solution.x[tri..];
        let min_slack = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_all = solution.x.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("n={n}: objective={:.12} min_slack={:.6e} min_x={:.6e} iters={}",
            problem.objective(&solution.x).unwrap(), min_slack, min_all, solution.iterations);
    }
}
