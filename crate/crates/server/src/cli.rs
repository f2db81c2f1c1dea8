//! `lecturelens` command line.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lecturelens_core::gateway::Gateway;
use lecturelens_core::geometry::Rect;
use lecturelens_core::imaging;
use lecturelens_core::layout::{detect_boxes_in, plan_from_boxes, render_debug, LayoutConfig};
use lecturelens_core::par::Execution;
use lecturelens_core::pipeline::{build_bundle, PipelineConfig, PipelineInputs};
use lecturelens_core::synth::{write_demo_bundle, write_demo_lecture};
use serde_json::json;

use crate::ServeOptions;

#[derive(Debug, Parser)]
#[command(
    name = "lecturelens",
    version,
    about = "Interactive lecture bundles: preprocess, serve, inspect"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a lecture video and transcript into a bundle.
    Preprocess(PreprocessArgs),
    /// Serve bundles and live sessions over HTTP.
    Serve(ServeArgs),
    /// Debugging tools.
    #[command(subcommand)]
    Inspect(InspectCommand),
    /// Write the synthetic three-slide lecture (and optionally its bundle).
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub video: PathBuf,
    #[arg(long)]
    pub transcript: PathBuf,
    /// Directory of interactive example HTML files.
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Output directory; defaults to bundles/<video stem>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Frame sampling interval in seconds.
    #[arg(long, default_value_t = 2.0)]
    pub interval: f64,
    /// Use the offline mock provider.
    #[arg(long)]
    pub mock: bool,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "BUNDLE_DIR", default_value = "bundles")]
    pub bundle_dir: PathBuf,
    #[arg(long, env = "PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Mock text provider and stub media; never touches the network.
    #[arg(long)]
    pub mock: bool,
    /// Session seconds per real second (speeds up speech and breaks).
    #[arg(long, default_value_t = 1.0)]
    pub clock_scale: f64,
    /// Where session logs live; defaults to <bundle-dir>/.sessions.
    #[arg(long)]
    pub sessions_dir: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum InspectCommand {
    /// Detected boxes, occupancy grid and overlay plan for one slide.
    Layout(LayoutArgs),
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[arg(long)]
    pub slide: PathBuf,
    /// Normalized anchor point "x,y".
    #[arg(long, default_value = "0.5,0.5", value_parser = parse_anchor)]
    pub anchor: (f64, f64),
    /// Text to size the overlay for.
    #[arg(long, default_value = "A short explanation of the selected area.")]
    pub text: String,
    /// Keep the default avatar corner free as well.
    #[arg(long)]
    pub avatar: bool,
    /// Write <out>.png (debug rendering) and <out>.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Write a ready-made bundle instead of the raw video and transcript.
    #[arg(long)]
    pub bundle: bool,
}

fn parse_anchor(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x: f64 = x.trim().parse().map_err(|e| format!("{e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("{e}"))?;
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err("anchor coordinates must be in [0,1]".into());
    }
    Ok((x, y))
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Parses arguments and runs; clap exits with 2 on usage errors.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Serve(a) => serve(a),
        Command::Inspect(InspectCommand::Layout(a)) => inspect_layout(a),
        Command::Demo(a) => demo(a),
    }
}

fn preprocess(a: PreprocessArgs) -> Result<(), String> {
    if !(a.interval > 0.0) {
        return Err("--interval must be positive".into());
    }
    let out = a.out.clone().unwrap_or_else(|| {
        let stem = a
            .video
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "lecture".into());
        Path::new("bundles").join(stem)
    });
    let gateway = if a.mock {
        Gateway::mock()
    } else {
        Gateway::from_env().map_err(|e| e.to_string())?
    };
    let cfg = PipelineConfig {
        interval_sec: a.interval,
        title: a.title.clone(),
        execution: execution(a.sequential),
        ..PipelineConfig::default()
    };
    let inputs = PipelineInputs {
        video: &a.video,
        transcript: &a.transcript,
        examples: a.examples.as_deref(),
        out_dir: &out,
    };
    let bundle = build_bundle(&inputs, &gateway, &cfg).map_err(|e| e.to_string())?;
    println!(
        "{}",
        json!({
            "bundleId": bundle.id,
            "out": out.display().to_string(),
            "sections": bundle.sections.len(),
            "examples": bundle.examples.len(),
            "providerCalls": gateway.calls(),
        })
    );
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), String> {
    if !(a.clock_scale > 0.0) {
        return Err("--clock-scale must be positive".into());
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port)
        .parse()
        .map_err(|e| format!("bad address: {e}"))?;
    let mut opts = ServeOptions::new(&a.bundle_dir);
    if let Some(d) = a.sessions_dir {
        opts.sessions_dir = d;
    }
    opts.mock = a.mock;
    opts.clock_scale = a.clock_scale;
    opts.execution = execution(a.sequential);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let state = crate::build_state(&opts).map_err(|e| e.to_string())?;
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("cannot bind {addr}: {e}"))?;
        // Printed for scripts that start the server on port 0.
        println!(
            "listening on http://{}",
            listener.local_addr().map_err(|e| e.to_string())?
        );
        crate::serve(listener, state)
            .await
            .map_err(|e| e.to_string())
    })
}

fn inspect_layout(a: LayoutArgs) -> Result<(), String> {
    let img = imaging::open(&a.slide).map_err(|e| format!("{}: {e}", a.slide.display()))?;
    let mut cfg = LayoutConfig::default();
    if a.avatar {
        cfg.reserved = vec![lecturelens_core::session::AVATAR_BOX];
    }
    let boxes: Vec<Rect> = detect_boxes_in(&img, &cfg.detect);
    let (plan, grid) = plan_from_boxes(&boxes, a.anchor, &a.text, &cfg);
    let report = json!({ "boxes": boxes, "grid": grid.ascii(), "plan": plan });
    let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    println!("{text}");
    if let Some(prefix) = a.out {
        let png = prefix.with_extension("png");
        render_debug(&img, &grid, &plan.region)
            .save(&png)
            .map_err(|e| format!("{}: {e}", png.display()))?;
        let js = prefix.with_extension("json");
        std::fs::write(&js, text).map_err(|e| format!("{}: {e}", js.display()))?;
    }
    Ok(())
}

fn demo(a: DemoArgs) -> Result<(), String> {
    if a.bundle {
        let b = write_demo_bundle(&a.out).map_err(|e| e.to_string())?;
        println!(
            "{}",
            json!({ "bundleId": b.id, "out": a.out.display().to_string() })
        );
    } else {
        let l = write_demo_lecture(&a.out).map_err(|e| e.to_string())?;
        println!(
            "{}",
            json!({
                "video": l.video.display().to_string(),
                "transcript": l.transcript.display().to_string(),
                "examples": l.examples_dir.display().to_string(),
            })
        );
    }
    Ok(())
}
