fn main() {
    aidsched_bench::cli::main();
}
