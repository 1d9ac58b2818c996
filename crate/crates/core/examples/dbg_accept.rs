use phg::*;
use std::time::Instant;

fn main() {
    let sys = gen_cyclic(14, &mut LiftingSource::seeded(7));
    let tables = build_tables(&homogenize(&sys));
    let p = 250;
    let batch = phg::bench::random_unit_batch(15, p, 7, -20.0);
    let logged = to_log_coords(&batch).unwrap();

    for kind in [BackendKind::Reference, BackendKind::Blocked] {
        let be = kind.instance();
        // GEMM pipeline timing
        let t = Instant::now();
        for _ in 0..100 {
            let _ = eval_extended_jacobian_log(&logged, &tables, be).unwrap();
        }
        let eval_t = t.elapsed().as_secs_f64() / 100.0;
        // QR timing
        let jac = evaluate_batch(&batch, &tables, p, be).unwrap();
        let bordered: Vec<_> = (0..p)
            .map(|i| assemble_bordered(&jac.block(i), batch.point(i)).unwrap())
            .collect();
        let transposed: Vec<ComplexMatrix> = bordered.iter().map(|b| b.matrix().transpose()).collect();
        let t = Instant::now();
        for _ in 0..100 {
            let _ = be.batched_qr(&transposed);
        }
        let qr_t = t.elapsed().as_secs_f64() / 100.0;
        let t = Instant::now();
        for _ in 0..100 {
            let _ = euler_newton_unified(&bordered, be);
        }
        let dir_t = t.elapsed().as_secs_f64() / 100.0;
        println!("{}: eval {:.1} ms, qr {:.1} ms, directions-total {:.1} ms (per call, p=250)",
            kind.name(), eval_t * 1e3, qr_t * 1e3, dir_t * 1e3);
    }
}
