"""
Núcleo de programação linear inteira mista (MILP) do OPTSORT.

O modelo é montado variável a variável e restrição a restrição
(``MilpModel``) e depois compilado para matrizes esparsas. O solver padrão é
um branch-and-bound em profundidade sobre relaxações LP resolvidas pelo
simplex dual do HiGHS (``scipy.optimize.linprog``). O backend ``highs``
entrega o modelo inteiro ao ``scipy.optimize.milp``.
"""
import logging
import math
import re
import time
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from optsort_core import OptsortError, SolveStatus

logger = logging.getLogger(__name__)

# Tolerância de integralidade e de viabilidade
TOL = 1e-6

Coefs = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    lb: float
    ub: float
    integer: bool


@dataclass(frozen=True)
class Constraint:
    """Restrição linear lo ≤ a·x ≤ hi (lo ou hi podem ser infinitos)"""
    coefs: Tuple[Tuple[int, float], ...]
    lo: float
    hi: float
    name: str


@dataclass(frozen=True)
class SolveLimits:
    time_limit: Optional[float] = None
    node_limit: int = 100_000
    mip_gap: float = 0.0
    backend: str = "embedded"


@dataclass(frozen=True, eq=False)
class Solution:
    status: SolveStatus
    values: Optional[np.ndarray]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float] = None
    nodes: int = 0

    @property
    def has_incumbent(self) -> bool:
        return self.values is not None

    def value(self, var_id: int) -> float:
        if self.values is None:
            raise OptsortError("solução sem valores (nenhuma solução viável)")
        return float(self.values[var_id])


@dataclass(frozen=True, eq=False)
class _Compilado:
    c: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray


class MilpModel:
    """
    Modelo MILP: variáveis com limites, restrições lineares e objetivo

    Exemplo:
        m = MilpModel("mochila")
        x1, x2 = m.add_binary("x1"), m.add_binary("x2")
        m.add_constraint({x1: 1, x2: 1}, "<=", 1)
        m.set_objective({x1: 1, x2: 1}, Sense.MAX)
    """

    def __init__(self, name: str = "milp", sense: Sense = Sense.MAX):
        self.name = name
        self.sense = sense
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self._compilado: Optional[_Compilado] = None

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, integer: bool = False) -> int:
        if lb > ub:
            raise ValueError(f"variável {name}: limite inferior {lb} maior que o superior {ub}")
        var = Variable(len(self.variables), name, float(lb), float(ub), integer)
        self.variables.append(var)
        self._compilado = None
        return var.id

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0, 1, integer=True)

    def _normalizar(self, coefs: Coefs) -> Tuple[Tuple[int, float], ...]:
        pares = coefs.items() if isinstance(coefs, Mapping) else coefs
        saida = []
        for var_id, coef in pares:
            if not 0 <= var_id < len(self.variables):
                raise ValueError(f"coeficiente referencia variável inexistente: {var_id}")
            if coef != 0:
                saida.append((int(var_id), float(coef)))
        return tuple(saida)

    def add_constraint(self, coefs: Coefs, relation: str, rhs: float, name: str = "") -> int:
        """
        Adiciona a·x (relation) rhs
        :param relation: '<=', '>=' ou '=='
        :return: Índice da restrição
        """
        if relation == "<=":
            lo, hi = -math.inf, rhs
        elif relation == ">=":
            lo, hi = rhs, math.inf
        elif relation in ("==", "="):
            lo, hi = rhs, rhs
        else:
            raise ValueError(f"relação desconhecida: {relation}")
        return self.add_range(coefs, lo, hi, name)

    def add_range(self, coefs: Coefs, lo: float, hi: float, name: str = "") -> int:
        """Adiciona lo ≤ a·x ≤ hi numa única linha"""
        nome = name or f"c{len(self.constraints)}"
        self.constraints.append(Constraint(self._normalizar(coefs), float(lo), float(hi), nome))
        self._compilado = None
        return len(self.constraints) - 1

    def set_objective(self, coefs: Coefs, sense: Optional[Sense] = None):
        self.objective = dict(self._normalizar(coefs))
        if sense is not None:
            self.sense = sense
        self._compilado = None

    def compile(self) -> _Compilado:
        """Matrizes do modelo (c, A em CSR, limites de linha e de variável, integralidade)"""
        if self._compilado is not None:
            return self._compilado
        n = len(self.variables)
        c = np.zeros(n)
        for var_id, coef in self.objective.items():
            c[var_id] = coef
        linhas, colunas, dados = [], [], []
        for i, restricao in enumerate(self.constraints):
            for var_id, coef in restricao.coefs:
                linhas.append(i)
                colunas.append(var_id)
                dados.append(coef)
        A = sparse.csr_matrix((dados, (linhas, colunas)), shape=(len(self.constraints), n))
        self._compilado = _Compilado(
            c=c,
            A=A,
            row_lo=np.array([r.lo for r in self.constraints], dtype=float),
            row_hi=np.array([r.hi for r in self.constraints], dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            integrality=np.array([1 if v.integer else 0 for v in self.variables], dtype=int),
        )
        return self._compilado


def check_solution(model: MilpModel, values: Sequence[float], tol: float = TOL) -> List[str]:
    """
    Verificador independente de viabilidade
    :return: Lista de violações (vazia se a solução for viável)
    """
    x = np.asarray(values, dtype=float)
    violacoes = []
    if x.shape != (model.num_vars,):
        return [f"vetor com {x.size} valores para {model.num_vars} variáveis"]
    for v in model.variables:
        if x[v.id] < v.lb - tol or x[v.id] > v.ub + tol:
            violacoes.append(f"{v.name}: fora dos limites [{v.lb}, {v.ub}]")
        if v.integer and abs(x[v.id] - round(x[v.id])) > tol:
            violacoes.append(f"{v.name}: não inteira ({x[v.id]})")
    for r in model.constraints:
        atividade = sum(coef * x[var_id] for var_id, coef in r.coefs)
        if atividade < r.lo - tol or atividade > r.hi + tol:
            violacoes.append(f"{r.name}: {atividade} fora de [{r.lo}, {r.hi}]")
    return violacoes


def _objetivo_inteiro(cm: _Compilado) -> bool:
    inteiras = cm.integrality == 1
    if np.any(cm.c[~inteiras] != 0):
        return False
    return bool(np.all(cm.c[inteiras] == np.round(cm.c[inteiras])))


def _matrizes_linprog(cm: _Compilado):
    """Separa as linhas em A_ub x ≤ b_ub e A_eq x = b_eq para o linprog"""
    iguais = np.isfinite(cm.row_lo) & (cm.row_lo == cm.row_hi)
    sup = np.isfinite(cm.row_hi) & ~iguais
    inf = np.isfinite(cm.row_lo) & ~iguais
    blocos, lados = [], []
    if sup.any():
        blocos.append(cm.A[sup])
        lados.append(cm.row_hi[sup])
    if inf.any():
        blocos.append(-cm.A[inf])
        lados.append(-cm.row_lo[inf])
    A_ub = sparse.vstack(blocos, format="csr") if blocos else None
    b_ub = np.concatenate(lados) if lados else None
    A_eq = cm.A[iguais] if iguais.any() else None
    b_eq = cm.row_lo[iguais] if iguais.any() else None
    return A_ub, b_ub, A_eq, b_eq


def _limitante_global(pilha: list, melhor_valor: float, limitante_raiz: Optional[float]) -> float:
    """Maior limitante entre os nós abertos, nunca acima do limitante da raiz"""
    abertos = [b for _, _, b in pilha]
    limitante = max(abertos + [melhor_valor]) if abertos else melhor_valor
    if limitante_raiz is not None:
        limitante = min(limitante, limitante_raiz)
    return limitante


def _gap(limitante: float, melhor_valor: float) -> float:
    return (limitante - melhor_valor) / max(1.0, abs(melhor_valor))


def _solve_embedded(model: MilpModel, limits: SolveLimits, warm_start: Optional[np.ndarray]) -> Solution:
    cm = model.compile()
    # Internamente sempre maximiza g·x
    sinal = 1.0 if model.sense == Sense.MAX else -1.0
    g = sinal * cm.c
    inteiras = np.flatnonzero(cm.integrality == 1)
    objetivo_inteiro = _objetivo_inteiro(cm)
    A_ub, b_ub, A_eq, b_eq = _matrizes_linprog(cm)

    melhor_x, melhor_valor = None, -math.inf
    if warm_start is not None:
        if not check_solution(model, warm_start):
            melhor_x = np.asarray(warm_start, dtype=float).copy()
            melhor_valor = float(g @ melhor_x)
            logger.debug("Solução inicial aceita: objetivo=%s", sinal * melhor_valor)
        else:
            logger.warning("Solução inicial descartada: viola restrições do modelo %s", model.name)

    def _limite_no(valor: float) -> float:
        return math.floor(valor + TOL) if objetivo_inteiro else valor

    # Pilha de nós: (lb, ub, limitante do pai)
    pilha = [(cm.lb.copy(), cm.ub.copy(), math.inf)]
    nos = 0
    limitante_raiz = None
    inicio = time.monotonic()
    limite_atingido = False

    while pilha:
        if nos >= limits.node_limit or (
                limits.time_limit is not None and time.monotonic() - inicio > limits.time_limit):
            limite_atingido = True
            break
        lb, ub, limitante_pai = pilha.pop()
        if limitante_pai <= melhor_valor + TOL:
            continue
        res = linprog(-g, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack((lb, ub)), method="highs-ds")
        nos += 1
        if res.status == 2:
            continue
        if res.status == 3:
            raise OptsortError(f"relaxação LP ilimitada no modelo {model.name}")
        if res.status != 0:
            # Falha numérica no nó: o nó volta para a pilha e a busca para por limite
            pilha.append((lb, ub, limitante_pai))
            limite_atingido = True
            break
        valor = -float(res.fun)
        x = res.x
        limitante = _limite_no(valor)
        if limitante_raiz is None:
            limitante_raiz = limitante
        if limitante <= melhor_valor + TOL:
            continue

        fracao = np.abs(x[inteiras] - np.round(x[inteiras]))
        if fracao.size == 0 or fracao.max() <= TOL:
            candidato = x.copy()
            candidato[inteiras] = np.round(candidato[inteiras])
            melhor_x, melhor_valor = candidato, float(g @ candidato)
            logger.debug("Nova incumbente no nó %d: objetivo=%s", nos, sinal * melhor_valor)
            if limits.mip_gap > 0 and pilha and \
                    _gap(_limitante_global(pilha, melhor_valor, limitante_raiz), melhor_valor) <= limits.mip_gap:
                logger.debug("Gap relativo dentro de %.4f após %d nós: busca encerrada", limits.mip_gap, nos)
                limite_atingido = True
                break
            continue

        # Mais fracionária; empate vai para o menor id (argmax devolve o primeiro)
        var = int(inteiras[int(np.argmax(fracao))])
        v = x[var]
        ub_baixo = ub.copy()
        ub_baixo[var] = math.floor(v)
        lb_cima = lb.copy()
        lb_cima[var] = math.ceil(v)
        pilha.append((lb, ub_baixo, limitante))
        pilha.append((lb_cima, ub, limitante))

    if not limite_atingido:
        if melhor_x is None:
            return Solution(SolveStatus.INFEASIBLE, None, None, None, nodes=nos)
        objetivo = sinal * melhor_valor
        return Solution(SolveStatus.OPTIMAL, melhor_x, objetivo, objetivo, gap=0.0, nodes=nos)

    limitante_global = _limitante_global(pilha, melhor_valor, limitante_raiz)
    if melhor_x is None:
        bound = None if not math.isfinite(limitante_global) else sinal * limitante_global
        return Solution(SolveStatus.LIMIT_REACHED, None, None, bound, nodes=nos)
    if not math.isfinite(limitante_global):
        limitante_global = math.inf
    gap = _gap(limitante_global, melhor_valor)
    status = SolveStatus.FEASIBLE if gap <= limits.mip_gap else SolveStatus.LIMIT_REACHED
    bound = sinal * limitante_global if math.isfinite(limitante_global) else None
    return Solution(status, melhor_x, sinal * melhor_valor, bound, gap=gap, nodes=nos)


def _solve_highs(model: MilpModel, limits: SolveLimits, warm_start: Optional[np.ndarray]) -> Solution:
    cm = model.compile()
    sinal = 1.0 if model.sense == Sense.MAX else -1.0
    opcoes = {"node_limit": limits.node_limit, "mip_rel_gap": limits.mip_gap}
    if limits.time_limit is not None:
        opcoes["time_limit"] = limits.time_limit
    restricoes = [LinearConstraint(cm.A, cm.row_lo, cm.row_hi)] if model.num_constraints else []
    res = milp(-sinal * cm.c, constraints=restricoes, integrality=cm.integrality,
               bounds=Bounds(cm.lb, cm.ub), options=opcoes)
    bound = getattr(res, "mip_dual_bound", None)
    bound = None if bound is None or not np.isfinite(bound) else -sinal * float(bound)
    nos = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 0:
        return Solution(SolveStatus.OPTIMAL, res.x, sinal * -float(res.fun), bound, gap=0.0, nodes=nos)
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE, None, None, None, nodes=nos)
    if res.status == 3:
        raise OptsortError(f"modelo {model.name} ilimitado")
    if res.x is not None:
        return Solution(SolveStatus.LIMIT_REACHED, res.x, sinal * -float(res.fun), bound, nodes=nos)
    if warm_start is not None and not check_solution(model, warm_start):
        x = np.asarray(warm_start, dtype=float)
        return Solution(SolveStatus.LIMIT_REACHED, x, float(cm.c @ x), bound, nodes=nos)
    return Solution(SolveStatus.LIMIT_REACHED, None, None, bound, nodes=nos)


BACKENDS = {
    "embedded": _solve_embedded,
    "highs": _solve_highs,
}


def solve(model: MilpModel, limits: Optional[SolveLimits] = None,
          warm_start: Optional[Sequence[float]] = None) -> Solution:
    """
    Resolve o modelo
    :param model: Modelo MILP
    :param limits: Limites de tempo, nós e gap, e backend ('embedded' ou 'highs')
    :param warm_start: Solução inicial (usada somente se for viável)
    :return: Solution com status, valores, objetivo e limitante
    """
    limits = limits or SolveLimits()
    if limits.backend not in BACKENDS:
        raise OptsortError(f"backend de solver desconhecido: {limits.backend}")

    if model.num_vars == 0:
        cm = model.compile()
        viavel = bool(np.all(cm.row_lo <= TOL) and np.all(cm.row_hi >= -TOL))
        if not viavel:
            return Solution(SolveStatus.INFEASIBLE, None, None, None)
        return Solution(SolveStatus.OPTIMAL, np.zeros(0), 0.0, 0.0, gap=0.0)

    inicial = None if warm_start is None else np.asarray(warm_start, dtype=float)
    inicio = time.monotonic()
    solucao = BACKENDS[limits.backend](model, limits, inicial)
    logger.info("Modelo %s (%d variáveis, %d restrições): status=%s objetivo=%s nós=%d em %.2fs",
                model.name, model.num_vars, model.num_constraints, solucao.status.value,
                solucao.objective, solucao.nodes, time.monotonic() - inicio)
    return solucao


def _nome_lp(nome: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", nome)


def _expressao(coefs: Iterable[Tuple[int, float]], nomes: List[str]) -> str:
    termos = []
    for var_id, coef in coefs:
        sinal = "-" if coef < 0 else "+"
        termos.append(f"{sinal} {abs(coef):g} {nomes[var_id]}")
    if not termos:
        return "0 " + nomes[0] if nomes else "0"
    linhas = [" ".join(termos[i:i + 8]) for i in range(0, len(termos), 8)]
    return "\n   ".join(linhas)


def write_lp(model: MilpModel, path) -> None:
    """
    Exporta o modelo no formato LP (CPLEX) para conferência com solvers externos
    :param model: Modelo MILP
    :param path: Arquivo de saída
    """
    nomes = [_nome_lp(v.name) or f"x{v.id}" for v in model.variables]
    saida = [f"\\ Modelo {model.name}", "Maximize" if model.sense == Sense.MAX else "Minimize"]
    saida.append(f" obj: {_expressao(sorted(model.objective.items()), nomes)}")
    saida.append("Subject To")
    for r in model.constraints:
        nome = _nome_lp(r.name)
        expr = _expressao(r.coefs, nomes)
        if r.lo == r.hi:
            saida.append(f" {nome}: {expr} = {r.hi:g}")
            continue
        if math.isfinite(r.hi):
            sufixo = "_hi" if math.isfinite(r.lo) else ""
            saida.append(f" {nome}{sufixo}: {expr} <= {r.hi:g}")
        if math.isfinite(r.lo):
            sufixo = "_lo" if math.isfinite(r.hi) else ""
            saida.append(f" {nome}{sufixo}: {expr} >= {r.lo:g}")
    saida.append("Bounds")
    binarias, gerais = [], []
    for v, nome in zip(model.variables, nomes):
        if v.integer and v.lb == 0 and v.ub == 1:
            binarias.append(nome)
            continue
        if v.integer:
            gerais.append(nome)
        if not math.isfinite(v.lb) and not math.isfinite(v.ub):
            saida.append(f" {nome} free")
        elif math.isfinite(v.ub):
            lb = f"{v.lb:g}" if math.isfinite(v.lb) else "-inf"
            saida.append(f" {lb} <= {nome} <= {v.ub:g}")
        else:
            saida.append(f" {nome} >= {v.lb:g}")
    if gerais:
        saida.append("General")
        saida.extend(f" {nome}" for nome in gerais)
    if binarias:
        saida.append("Binary")
        saida.extend(f" {nome}" for nome in binarias)
    saida.append("End")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(saida) + "\n")


if __name__ == '__main__':
    m = MilpModel("mochila")
    x1, x2 = m.add_binary("x1"), m.add_binary("x2")
    m.add_constraint({x1: 1, x2: 1}, "<=", 1)
    m.set_objective({x1: 1, x2: 1}, Sense.MAX)
    s = solve(m)
    print(f"Status: {s.status.value}  objetivo: {s.objective}  valores: {s.values}")
