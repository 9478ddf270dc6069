use decopt::topology::{build_graph, GraphSpec, Topology};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec: GraphSpec = serde_json::from_str(&args[0]).expect("graph spec JSON");
    let topo = Topology::with_max_degree(build_graph(&spec).expect("valid graph"));
    let r = topo.mixing().report();
    println!(
        "lambda_min {:.4} lambda_2 {:.4} laplacian ratio {:.4} bipartite {}",
        r.lambda_min,
        r.lambda_second,
        topo.laplacian_ratio(),
        topo.graph().is_bipartite()
    );
}
