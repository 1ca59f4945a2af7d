"""命令行启动入口模块
`semspace` 命令的入口：解析全局参数与子命令，完成进程初始化后把请求分派给对应的处理函数。
子命令既可以单独执行流水线的某一阶段（kernel / denoise / fit / project / annotate / evaluate），
也可以用 run 执行完整流水线、用 cv 选择超参数。
退出码: 0 成功, 1 未知错误, 2 配置错误, 3 数据错误, 4 数值错误。
"""
import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

from loguru import logger

from .config import RUNTIME, WORKDIR, load_pipeline_config
from .exceptions import AppError
from .initialize import Initializer, ResourceCopier
from .mapping import EmbeddingSpace, KernelKind, TransferMethod
from .model import DenoiseConfig, KccaConfig, KernelSpec, SynthSpec, TransferConfig


def _float_or_auto(value: str) -> float | str:
    return value if value == "auto" else float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semspace", description="KCCA 语义空间与标签迁移图像标注")
    parser.add_argument("--seed", type=int, default=None, help="全局随机种子（覆盖配置文件）")
    parser.add_argument("--threads", type=int, default=None, help="分块核计算的线程数")
    parser.add_argument("--cache-dir", type=Path, default=None, help="核矩阵缓存目录")
    parser.add_argument("--log-level", default=None, help="日志级别, 默认 INFO")
    parser.add_argument("--progress", action="store_true", default=None, help="显示分块计算进度条")
    parser.add_argument("--env-file", type=Path, default=None, help="指定 .env 文件")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="计算核矩阵或样本外核块")
    p.add_argument("--kind", required=True, choices=[k.value for k in KernelKind])
    p.add_argument("--train", type=Path, required=True, help="训练图像的特征文件或标注文件")
    p.add_argument("--query", type=Path, default=None, help="查询图像（给出时输出 查询×训练 的核块）")
    p.add_argument("--vocab", type=Path, default=None, help="文本核所需的词表")
    p.add_argument("--similarity", type=Path, default=None, help="ontology_labels 的标签相似度矩阵")
    p.add_argument("--clip-psd", action="store_true", help="对相似度矩阵做特征值截断")
    p.add_argument("--word-vectors", type=Path, default=None, help="wordvec_labels 的词向量文件")
    p.add_argument("--C", dest="chi2_c", type=_float_or_auto, default="auto", help="exp_chi2 的尺度 C")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("denoise", help="训练标签的视觉预传播")
    p.add_argument("--kv", type=Path, required=True, help="训练视觉核矩阵")
    p.add_argument("--tags", type=Path, required=True, help="训练用户标注")
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--R", type=int, default=100)
    p.add_argument("--sigma", type=_float_or_auto, default="auto")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("fit", help="拟合 KCCA 语义投影器")
    p.add_argument("--kv", type=Path, required=True, help="训练视觉核矩阵")
    p.add_argument("--kt", type=Path, required=True, help="训练文本核矩阵")
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--max-rank", type=int, default=4096)
    p.add_argument("--pgso-tol", type=float, default=1e-6)
    p.add_argument("--m", type=int, default=None, help="保留的语义维度")
    p.add_argument("--normalize", action="store_true", help="拟合前按平均对角元归一化两个核矩阵")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("project", help="把图像嵌入语义空间")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--kv-rows", type=Path, required=True, help="图像对训练图像的视觉核块")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("annotate", help="标签迁移并输出 top-n 标注")
    p.add_argument("--method", choices=[m.value for m in TransferMethod], default=TransferMethod.NNVOT.value)
    p.add_argument("--space", choices=[s.value for s in EmbeddingSpace], default=EmbeddingSpace.SEMANTIC.value)
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--m-per-label", type=int, default=5)
    p.add_argument("--lambda", dest="svm_lambda", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=None, help="SVM/TagProp 训练轮数")
    p.add_argument("--train-psi", type=Path, help="语义空间: 训练图像 ψ")
    p.add_argument("--query-psi", type=Path, help="语义空间: 查询图像 ψ")
    p.add_argument("--kv-train", type=Path, help="基线空间: 训练视觉核矩阵")
    p.add_argument("--kv-query", type=Path, help="基线空间: 查询×训练视觉核块")
    p.add_argument("--train-features", type=Path, help="基线 SVM: 训练视觉特征")
    p.add_argument("--query-features", type=Path, help="基线 SVM: 查询视觉特征")
    p.add_argument("--train-annotations", type=Path, required=True)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="TSV 标注输出")
    p.add_argument("--scores-out", type=Path, default=None, help="相关度矩阵输出（供 evaluate 使用）")

    p = sub.add_parser("evaluate", help="计算 MAP、Prec@n、Rec@n、N+")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--per-label", action="store_true")
    p.add_argument("--out", type=Path, default=None, help="同时写出 TSV 报告")

    p = sub.add_parser("synth", help="生成合成多模态数据")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--n-classes", type=int, default=8)
    p.add_argument("--images-per-class", type=int, default=60)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--vocab-size", type=int, default=24)
    p.add_argument("--labels-per-class", type=int, default=3)
    p.add_argument("--visual-noise", type=float, default=1.0)
    p.add_argument("--tag-noise-rate", type=float, default=0.0)
    p.add_argument("--test-fraction", type=float, default=0.25)

    p = sub.add_parser("run", help="执行完整流水线")
    p.add_argument("--config", type=Path, default=None, help="YAML 配置, 默认为内置默认配置")
    p.add_argument("--out-dir", type=Path, default=None)

    p = sub.add_parser("cv", help="3 折交叉验证选择 K 或 λ")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--out-dir", type=Path, default=None)

    p = sub.add_parser("init-config", help="写出默认配置文件")
    p.add_argument("--out", type=Path, default=Path("semspace.yaml"))
    p.add_argument("--force", action="store_true")
    return parser


def _seed(args: argparse.Namespace) -> int | None:
    """命令行 --seed 优先, 其次 SEMSPACE_SEED；都未给出时为 None"""
    return RUNTIME.seed if args.seed is None else args.seed


def cmd_kernel(args: argparse.Namespace) -> None:
    from .core.kernels import compute_kernel
    from .storage import (load_annotations, load_feature_matrix, load_real_annotations, load_similarity,
                          load_vocabulary, load_word_vectors, save_gram, save_kernel_block)
    from .model import GramMatrix
    from .utils import hash_file
    kind = KernelKind(args.kind)
    params: dict = {}
    if kind is KernelKind.EXP_CHI2:
        params["C"] = args.chi2_c
    if kind is KernelKind.ONTOLOGY_LABELS and args.clip_psd:
        params["clip_psd"] = 1.0
    spec = KernelSpec(kind=kind, params=params)
    extra = {}
    if kind.is_textual:
        if args.vocab is None:
            AppError.MissingParameter.raise_(f"{kind.value} 需要 --vocab")
        vocab = load_vocabulary(args.vocab)

        def load(path: Path):
            return load_real_annotations(path, vocab) if path.suffix == ".fmat" else load_annotations(path, vocab)
        if kind is KernelKind.ONTOLOGY_LABELS:
            if args.similarity is None:
                AppError.MissingParameter.raise_("ontology_labels 需要 --similarity")
            extra["similarity"] = load_similarity(args.similarity, vocab)
        if kind is KernelKind.WORDVEC_LABELS:
            if args.word_vectors is None:
                AppError.MissingParameter.raise_("wordvec_labels 需要 --word-vectors")
            extra["word_vectors"] = load_word_vectors(args.word_vectors)
    else:
        load = load_feature_matrix
    train = load(args.train)
    query = None if args.query is None else load(args.query)
    inputs = {"train": hash_file(args.train)} | ({} if args.query is None else {"query": hash_file(args.query)})
    result = compute_kernel(spec, train, None, **extra) if query is None else compute_kernel(spec, query, train, **extra)
    config = {"kernel": spec.model_dump(mode="json")}
    if isinstance(result, GramMatrix):
        save_gram(result, args.out, inputs, config)
    else:
        save_kernel_block(result, args.out, inputs, config)
    logger.opt(colors=True).info("<g>Kernel</g>:{} {} 已写入 <c>{}</c> |<g>SUCCESS</g>",
                                 result.kernel_id, result.values.shape, args.out)


def cmd_denoise(args: argparse.Namespace) -> None:
    from .core.denoise import pre_propagate_tags
    from .storage import load_annotations, load_gram, load_vocabulary, save_real_annotations
    from .utils import hash_file
    cfg = DenoiseConfig(enabled=True, R=args.R, sigma=args.sigma)
    kv = load_gram(args.kv)
    tags = load_annotations(args.tags, load_vocabulary(args.vocab))
    denoised = pre_propagate_tags(tags, kv, cfg)
    save_real_annotations(denoised, args.out, {"kv": hash_file(args.kv), "tags": hash_file(args.tags)},
                          {"denoise": cfg.model_dump(mode="json")})
    logger.opt(colors=True).info("<g>Denoise</g>:已写入 <c>{}</c> |<g>SUCCESS</g>", args.out)


def cmd_fit(args: argparse.Namespace) -> None:
    from .core.kcca import fit_kcca
    from .storage import load_gram, save_projector, write_sidecar
    from .utils import hash_file
    cfg = KccaConfig(kappa=args.kappa, max_rank=args.max_rank, pgso_tol=args.pgso_tol, m_dims=args.m,
                     normalize=args.normalize)
    kv, kt = load_gram(args.kv), load_gram(args.kt)
    if kt.row_ids != kv.row_ids:
        AppError.DimensionMismatch.raise_("视觉核与文本核的训练图像不一致或顺序不同")
    projector = fit_kcca(kv, kt, cfg)
    save_projector(projector, args.out)
    write_sidecar(args.out, "projector", {"m_dims": projector.m_dims, "n_train": projector.n_train},
                  {"kv": hash_file(args.kv), "kt": hash_file(args.kt)}, {"kcca": cfg.model_dump(mode="json")})


def cmd_project(args: argparse.Namespace) -> None:
    from .core.kcca import project
    from .storage import load_kernel_block, load_projector, save_feature_matrix, write_sidecar
    from .utils import hash_file
    psi = project(load_projector(args.model), load_kernel_block(args.kv_rows))
    save_feature_matrix(psi, args.out, dtype="f64")
    write_sidecar(args.out, "features", {"m_dims": psi.n_cols},
                  {"model": hash_file(args.model), "kv_rows": hash_file(args.kv_rows)})
    logger.opt(colors=True).info("<g>Project</g>:{} 张图像已嵌入 {} 维 |<g>SUCCESS</g>", psi.n_rows, psi.n_cols)


def cmd_annotate(args: argparse.Namespace) -> None:
    from .core.transfer import AbstractRelevance, NeighborIndex, TransferData, TransferQueries, ranked_predictions
    from .storage import (load_annotations, load_feature_matrix, load_gram, load_kernel_block, load_vocabulary,
                          save_scores, write_topn_tsv)
    method, space = TransferMethod(args.method), EmbeddingSpace(args.space)
    update = {"method": method, "space": space, "K": args.K, "m_per_label": args.m_per_label,
              "svm_lambda": args.svm_lambda}
    if args.epochs is not None:
        update |= {"svm_epochs": args.epochs, "tagprop_epochs": args.epochs}
    cfg = TransferConfig(**update)
    vocab = load_vocabulary(args.vocab)
    annotations = load_annotations(args.train_annotations, vocab)
    if space is EmbeddingSpace.SEMANTIC:
        if args.train_psi is None or args.query_psi is None:
            AppError.MissingParameter.raise_("语义空间需要 --train-psi 与 --query-psi")
        train, query = load_feature_matrix(args.train_psi), load_feature_matrix(args.query_psi)
        index = NeighborIndex.from_embedding(train)
        data = TransferData(index, annotations, train)
        queries = TransferQueries.from_index(index, query)
    else:
        if args.kv_train is None or args.kv_query is None:
            AppError.MissingParameter.raise_("基线空间需要 --kv-train 与 --kv-query")
        index = NeighborIndex.from_gram(load_gram(args.kv_train))
        train_features = None if args.train_features is None else load_feature_matrix(args.train_features)
        query_features = None if args.query_features is None else load_feature_matrix(args.query_features)
        data = TransferData(index, annotations, train_features)
        queries = TransferQueries.from_index(index, load_kernel_block(args.kv_query), query_features)
    scores = AbstractRelevance.create(method, cfg, seed=_seed(args) or 0).fit(data).score(queries)
    write_topn_tsv(args.out, scores.row_ids, vocab, ranked_predictions(scores, args.n))
    if args.scores_out is not None:
        save_scores(scores, args.scores_out, config={"transfer": cfg.model_dump(mode="json")})
    logger.opt(colors=True).info("<g>Annotate</g>:{} 张图像已标注, 写入 <c>{}</c> |<g>SUCCESS</g>",
                                 len(scores.row_ids), args.out)


def cmd_evaluate(args: argparse.Namespace) -> None:
    from .core.evaluation import evaluate, render_report_tsv
    from .storage import load_annotations, load_scores
    scores = load_scores(args.scores)
    truth = load_annotations(args.truth, scores.vocabulary)
    text = render_report_tsv(evaluate(scores, truth, args.n, per_label=args.per_label))
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_synth(args: argparse.Namespace) -> None:
    from .core.synth import synth_dataset, write_synth
    values = {name: getattr(args, name) for name in SynthSpec.model_fields if name != "seed"}
    write_synth(synth_dataset(SynthSpec(seed=_seed(args) or 0, **values)), args.out_dir)


def _pipeline_config(args: argparse.Namespace):
    cfg = load_pipeline_config(args.config or WORKDIR.default_config)
    update = {}
    if (seed := _seed(args)) is not None:
        update["seed"] = seed
    if args.out_dir is not None:
        update["out_dir"] = args.out_dir
    return cfg.model_copy(update=update) if update else cfg


def cmd_run(args: argparse.Namespace) -> None:
    from .core.pipeline import PipelineRunner
    result = PipelineRunner.create_and_run(_pipeline_config(args))
    sys.stdout.write(result.artifacts["report"].read_text(encoding="utf-8"))


def cmd_cv(args: argparse.Namespace) -> None:
    from .core.pipeline import PipelineRunner
    result = PipelineRunner(_pipeline_config(args)).cross_validate(folds=args.folds)
    for value, score in zip(result.grid, result.scores):
        sys.stdout.write(f"{result.parameter}={value:g}\t{'NA' if score is None else f'{score:.6f}'}\n")
    sys.stdout.write(f"best\t{result.parameter}={result.best:g}\n")


def cmd_init_config(args: argparse.Namespace) -> None:
    ResourceCopier.copy_default_config(args.out, force=args.force)


COMMANDS: dict[str, Callable[[argparse.Namespace], None]] = {
    "kernel": cmd_kernel,
    "denoise": cmd_denoise,
    "fit": cmd_fit,
    "project": cmd_project,
    "annotate": cmd_annotate,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
    "run": cmd_run,
    "cv": cmd_cv,
    "init-config": cmd_init_config,
}


def main(argv: Sequence[str] | None = None) -> int:
    """命令行主函数，返回退出码"""
    args = build_parser().parse_args(argv)
    try:
        Initializer.create_and_run(args.env_file, {
            "seed": args.seed, "threads": args.threads, "cache_dir": args.cache_dir,
            "log_level": args.log_level, "progress": args.progress,
        })
        COMMANDS[args.command](args)
    except AppError.Exception as e:
        stage = f" (阶段: {e.stage})" if e.stage else ""
        logger.opt(colors=True).error("<r>{}</r>:{}{} |<r>FAIL</r>", args.command, e, stage)
        sys.stderr.write(f"semspace {args.command}: {e}{stage}\n")
        return e.error_code.exit_code
    except Exception as e:
        logger.opt(colors=True).exception("<r>{}</r>:未预期的错误: {} |<r>FAIL</r>", args.command, e)
        sys.stderr.write(f"semspace {args.command}: {AppError.UnknownError} {e}\n")
        return AppError.UnknownError.exit_code
    return 0


def launch() -> None:
    """console script 入口"""
    sys.exit(main())
