mod common;

use candle_core::{DType, Device, Tensor};
use docarg_core::amr::{InteractionGraph, RelationCategory};
use docarg_model::interaction::{compose_nodes, decompose, rgcn_layer, GraphOperators, SelfLoop};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::graph;

fn ops(g: &InteractionGraph, words: usize, k: usize, self_loop: SelfLoop) -> GraphOperators {
    GraphOperators::new("t", g, words, &RelationCategory::ALL[..k], self_loop, DType::F64, &Device::Cpu).unwrap()
}

/// Direct evaluation of the double sum over categories and neighbours.
fn brute_force(g: &InteractionGraph, h: &[Vec<f64>], w: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let d = h[0].len();
    (0..h.len())
        .map(|u| {
            let mut acc = vec![0.0; d];
            for (k, wk) in w.iter().enumerate() {
                let mut members: Vec<usize> = g.neighbors[k][u].iter().copied().collect();
                members.push(u);
                let c = members.len() as f64;
                for v in members {
                    for i in 0..d {
                        for j in 0..d {
                            acc[i] += wk[i][j] * h[v][j] / c;
                        }
                    }
                }
            }
            acc.into_iter().map(|x| x.max(0.0)).collect()
        })
        .collect()
}

fn tensor(rows: &[Vec<f64>]) -> Tensor {
    let cols = rows[0].len();
    Tensor::from_vec(rows.concat(), (rows.len(), cols), &Device::Cpu).unwrap()
}

#[test]
fn rgcn_matches_double_sum_on_random_graphs() {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=5);
        let edges: Vec<(usize, usize, usize)> = (0..rng.gen_range(0..=n * 2))
            .map(|_| (rng.gen_range(0..k), rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        let g = graph(&vec![Some((0, 0)); n], &edges);
        let h: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let w: Vec<Vec<Vec<f64>>> = (0..k)
            .map(|_| (0..d).map(|_| (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect())
            .collect();
        let wt = Tensor::from_vec(w.concat().concat(), (k, d, d), &Device::Cpu).unwrap();
        let got = rgcn_layer(&tensor(&h), &ops(&g, 1, k, SelfLoop::PerCategory), &wt, None)
            .unwrap()
            .to_vec2::<f64>()
            .unwrap();
        let expect = brute_force(&g, &h, &w);
        for (a, b) in got.iter().flatten().zip(expect.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-6, "max deviation {worst}");
}

#[test]
fn isolated_node_identity_weights() {
    let g = graph(&[Some((0, 0))], &[]);
    let k = 3;
    let eye = Tensor::eye(3, DType::F64, &Device::Cpu).unwrap();
    let w = Tensor::stack(&vec![eye; k], 0).unwrap();
    let h = Tensor::new(&[[0.2f64, -0.4, 1.0]], &Device::Cpu).unwrap();
    let out = rgcn_layer(&h, &ops(&g, 1, k, SelfLoop::PerCategory), &w, None).unwrap();
    let out = out.to_vec2::<f64>().unwrap();
    let expect = [0.6, 0.0, 3.0];
    for (a, b) in out[0].iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn zero_states_give_zero_output() {
    let g = graph(&[Some((0, 0)), Some((1, 1)), None], &[(0, 0, 1), (1, 1, 2)]);
    let w = Tensor::ones((2, 4, 4), DType::F64, &Device::Cpu).unwrap();
    let h = Tensor::zeros((3, 4), DType::F64, &Device::Cpu).unwrap();
    let out = rgcn_layer(&h, &ops(&g, 2, 2, SelfLoop::PerCategory), &w, None).unwrap();
    assert!(out.flatten_all().unwrap().to_vec1::<f64>().unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn single_self_loop_uses_neighbours_only() {
    let g = graph(&[Some((0, 0)), Some((1, 1))], &[(0, 0, 1)]);
    let w = Tensor::stack(&[Tensor::eye(1, DType::F64, &Device::Cpu).unwrap()], 0).unwrap();
    let self_w = Tensor::new(&[[2.0f64]], &Device::Cpu).unwrap();
    let h = Tensor::new(&[[1.0f64], [3.0]], &Device::Cpu).unwrap();
    let out = rgcn_layer(&h, &ops(&g, 2, 1, SelfLoop::Single), &w, Some(&self_w)).unwrap();
    assert_eq!(out.to_vec2::<f64>().unwrap(), vec![vec![3.0 + 2.0], vec![1.0 + 6.0]]);
}

#[test]
fn compose_is_span_mean_and_unaligned_is_zero() {
    let z = Tensor::new(&[[1.0f64, 10.0], [2.0, 20.0], [4.0, 40.0], [8.0, 80.0], [16.0, 160.0], [32.0, 320.0]], &Device::Cpu).unwrap();
    let g = graph(&[Some((1, 2)), Some((4, 4)), None], &[]);
    let h0 = compose_nodes(&z, &ops(&g, 6, 13, SelfLoop::PerCategory)).unwrap().to_vec2::<f64>().unwrap();
    assert_eq!(h0[0], vec![3.0, 30.0]);
    assert_eq!(h0[1], vec![16.0, 160.0]);
    assert_eq!(h0[2], vec![0.0, 0.0]);
}

#[test]
fn compose_exhaustive_over_spans() {
    let d = 3;
    let n = 7;
    let z: Vec<Vec<f64>> = (0..n).map(|i| (0..d).map(|j| (i * 7 + j * 3) as f64 * 0.25).collect()).collect();
    let zt = tensor(&z);
    for a in 0..n {
        for b in a..n {
            let g = graph(&[Some((a, b))], &[]);
            let h0 = compose_nodes(&zt, &ops(&g, n, 13, SelfLoop::PerCategory)).unwrap().to_vec2::<f64>().unwrap();
            for j in 0..d {
                let expect = (a..=b).map(|i| z[i][j]).sum::<f64>() / (b - a + 1) as f64;
                assert!((h0[0][j] - expect).abs() < 1e-12, "span [{a},{b}]");
            }
        }
    }
}

#[test]
fn decompose_residual_and_cover_mean() {
    let z = Tensor::new(&[[1.0f64], [2.0], [3.0], [4.0]], &Device::Cpu).unwrap();
    // words 2 and 3 are uncovered; the unaligned node never writes back
    let g = graph(&[Some((0, 1)), Some((1, 1)), None], &[]);
    let nodes = Tensor::new(&[[10.0f64], [20.0], [1000.0]], &Device::Cpu).unwrap();
    let out = decompose(&z, &ops(&g, 4, 13, SelfLoop::PerCategory), &nodes).unwrap().to_vec2::<f64>().unwrap();
    assert_eq!(out, vec![vec![11.0], vec![17.0], vec![3.0], vec![4.0]]);
}
